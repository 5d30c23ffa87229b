#pragma once

// Umbrella header. Live HTTP backends are opt-in via stylemt/http_backend.hpp.

#include "stylemt/alignment.hpp"
#include "stylemt/attention.hpp"
#include "stylemt/backends.hpp"
#include "stylemt/error.hpp"
#include "stylemt/evalkit.hpp"
#include "stylemt/ibm1.hpp"
#include "stylemt/lexicon.hpp"
#include "stylemt/markup.hpp"
#include "stylemt/pipelines.hpp"
#include "stylemt/prompts.hpp"
#include "stylemt/runner.hpp"
#include "stylemt/utf8.hpp"
