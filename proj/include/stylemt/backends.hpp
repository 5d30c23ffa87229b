#pragma once

// Translation and completion backends. Live HTTP clients live in
// http_backend.hpp; this header holds the request types, configuration and
// the two offline mock families:
//
//   replay      canned responses keyed by a SHA-256 digest of the request
//   dictionary  word-for-word substitution plus reordering rules

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stylemt/error.hpp"
#include "stylemt/markup.hpp"
#include "stylemt/utf8.hpp"

namespace stylemt {

struct TranslationRequest {
  std::string body;
  std::string source_lang = "en";
  std::string target_lang = "de";
  bool preserve_markup = false;
};

struct CompletionRequest {
  std::string system_prompt;
  std::string user_prompt;
  int max_output_tokens = 1024;
};

inline void validate(const TranslationRequest &req) {
  if (req.body.empty()) throw Error(ErrorKind::invalid_argument, "translation body is empty");
  if (req.source_lang.empty() || req.target_lang.empty())
    throw Error(ErrorKind::invalid_argument, "language codes must be non-empty");
  if (req.source_lang == req.target_lang)
    throw Error(ErrorKind::invalid_argument, "source and target language are identical");
}

inline void validate(const CompletionRequest &req) {
  if (req.system_prompt.empty() || req.user_prompt.empty())
    throw Error(ErrorKind::invalid_argument, "completion prompts must be non-empty");
  if (req.max_output_tokens <= 0)
    throw Error(ErrorKind::invalid_argument, "max_output_tokens must be > 0");
}

// ---------------------------------------------------------------------------
// Request digests

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::invalid_argument, "SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(kHex[md[k] >> 4]);
    out.push_back(kHex[md[k] & 0x0F]);
  }
  return out;
}

/// Digest over the fields that determine the translation. The canonical form
/// is compact JSON with sorted keys.
inline std::string request_digest(const TranslationRequest &req) {
  const nlohmann::json canon = {{"op", "translate"},
                                {"body", req.body},
                                {"source_lang", req.source_lang},
                                {"target_lang", req.target_lang},
                                {"preserve_markup", req.preserve_markup}};
  return sha256_hex(canon.dump());
}

/// max_output_tokens is a budget, not content; it does not enter the digest.
inline std::string request_digest(const CompletionRequest &req) {
  const nlohmann::json canon = {
      {"op", "complete"}, {"system_prompt", req.system_prompt}, {"user_prompt", req.user_prompt}};
  return sha256_hex(canon.dump());
}

// ---------------------------------------------------------------------------
// Backend interface

class Backend {
 public:
  explicit Backend(std::string name) : name_(std::move(name)) {}
  virtual ~Backend() = default;
  Backend(const Backend &) = delete;
  Backend &operator=(const Backend &) = delete;

  const std::string &name() const { return name_; }

  virtual std::string translate(const TranslationRequest &) const {
    throw Error(ErrorKind::config_error, "backend '" + name_ + "' does not translate");
  }

  virtual std::string complete(const CompletionRequest &) const {
    throw Error(ErrorKind::config_error, "backend '" + name_ + "' does not complete prompts");
  }

 private:
  std::string name_;
};

// ---------------------------------------------------------------------------
// Replay mock

struct ReplayRecord {
  std::string request_digest;
  std::string response;
};

class ReplayBackend final : public Backend {
 public:
  ReplayBackend(std::string name, const std::vector<ReplayRecord> &records) : Backend(std::move(name)) {
    for (const auto &r : records) responses_.emplace(r.request_digest, r.response);
  }

  std::string translate(const TranslationRequest &req) const override {
    validate(req);
    return lookup(request_digest(req));
  }

  std::string complete(const CompletionRequest &req) const override {
    validate(req);
    std::string out = lookup(request_digest(req));
    if (out.find_first_not_of(" \t\r\n") == std::string::npos)
      throw Error(ErrorKind::empty_completion, "backend '" + name() + "' returned an empty completion");
    return out;
  }

  std::size_t size() const { return responses_.size(); }

 private:
  std::string lookup(const std::string &digest) const {
    const auto it = responses_.find(digest);
    if (it == responses_.end())
      throw Error(ErrorKind::remote_error,
                  "backend '" + name() + "': no replay fixture for request digest " + digest);
    return it->second;
  }

  std::map<std::string, std::string> responses_;
};

/// Replay fixture file: [{"request_digest": str, "response": str}, ...].
/// Other keys (e.g. a human-readable "note") are ignored.
inline std::vector<ReplayRecord> load_replay_records(const nlohmann::json &j) {
  if (!j.is_array()) throw Error(ErrorKind::format_error, "replay fixtures must be a JSON array");
  std::vector<ReplayRecord> out;
  for (const auto &r : j) {
    try {
      out.push_back({r.at("request_digest").get<std::string>(), r.at("response").get<std::string>()});
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorKind::format_error, std::string("replay record: ") + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dictionary mock

/// Moves the first occurrence of a word group (target-side words, compared
/// casefolded) to a new position among the words of the sentence.
struct ReorderRule {
  std::string name;
  std::vector<std::string> group;
  /// "start", "end" (before trailing punctuation) or a word index.
  std::string to = "end";
};

class DictionaryBackend final : public Backend {
 public:
  DictionaryBackend(std::string name, std::map<std::string, std::string> lexicon,
                    std::vector<ReorderRule> rules = {})
      : Backend(std::move(name)), rules_(std::move(rules)) {
    for (auto &[k, v] : lexicon) lexicon_.emplace(utf8::casefold(k), std::move(v));
  }

  std::string translate(const TranslationRequest &req) const override {
    validate(req);
    const auto parsed = parse_tagged(req.body, MarkupFormat::numbered_tags);
    const auto &doc = parsed.doc;

    std::vector<std::set<int>> token_styles(doc.tokens.size());
    for (const auto &span : doc.spans) {
      for (std::size_t k = span.range.start; k < span.range.end; ++k)
        token_styles[k].insert(span.style_id);
    }

    std::vector<Word> words;
    std::vector<std::string> missing;
    for (std::size_t k = 0; k < doc.tokens.size(); ++k) {
      const auto &tok = doc.tokens[k];
      const bool punct = utf8::is_punct_only(tok.surface);
      const bool glued = k > 0 && doc.tokens[k - 1].char_end == tok.char_start;
      const auto styles = req.preserve_markup ? token_styles[k] : std::set<int>{};
      if (punct || is_number(tok.surface)) {
        words.push_back({tok.surface, styles, punct, glued});
        continue;
      }
      const auto it = lexicon_.find(utf8::casefold(tok.surface));
      if (it == lexicon_.end()) {
        missing.push_back(tok.surface);
        continue;
      }
      bool first = true;
      for (const auto &w : make_plain(it->second).tokens) {
        words.push_back({w.surface, styles, false, glued && first});
        first = false;
      }
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto &m : missing) list += (list.empty() ? "" : ", ") + m;
      throw Error(ErrorKind::oov_error, "dictionary backend '" + name() + "' cannot translate: " + list);
    }
    for (const auto &rule : rules_) apply(rule, words);
    return render(words);
  }

 private:
  struct Word {
    std::string surface;
    std::set<int> styles;
    bool punct = false;
    bool glued = false;  // no space before it in the output
  };

  static bool is_number(const std::string &s) {
    return !s.empty() && s.find_first_not_of("0123456789.,") == std::string::npos &&
           std::isdigit(static_cast<unsigned char>(s.front()));
  }

  static void apply(const ReorderRule &rule, std::vector<Word> &words) {
    if (rule.group.empty() || rule.group.size() > words.size()) return;
    std::size_t at = words.size();
    for (std::size_t k = 0; k + rule.group.size() <= words.size() && at == words.size(); ++k) {
      bool match = true;
      for (std::size_t g = 0; g < rule.group.size() && match; ++g)
        match = utf8::casefold(words[k + g].surface) == utf8::casefold(rule.group[g]);
      if (match) at = k;
    }
    if (at == words.size()) return;
    const auto first = words.begin() + static_cast<std::ptrdiff_t>(at);
    std::vector<Word> moved(first, first + static_cast<std::ptrdiff_t>(rule.group.size()));
    words.erase(first, first + static_cast<std::ptrdiff_t>(rule.group.size()));

    std::size_t dest;
    if (rule.to == "start") {
      dest = 0;
    } else if (rule.to == "end") {
      dest = words.size();
      while (dest > 0 && words[dest - 1].punct) --dest;
    } else {
      dest = std::min<std::size_t>(std::stoul(rule.to), words.size());
    }
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(dest), moved.begin(), moved.end());
    // After a move only punctuation stays attached to its left neighbour.
    for (auto &w : words) w.glued = w.glued && w.punct;
    words.front().glued = false;
  }

  static std::string render(const std::vector<Word> &words) {
    std::string out;
    std::vector<int> open;  // stack of open style ids
    for (std::size_t k = 0; k < words.size(); ++k) {
      const auto &w = words[k];
      // Close styles the word does not carry (innermost first).
      while (!open.empty()) {
        bool keep = true;
        for (int id : open) keep = keep && w.styles.count(id);
        if (keep) break;
        out += "</S" + std::to_string(open.back()) + ">";
        open.pop_back();
      }
      if (k > 0 && !w.glued) out += ' ';
      for (int id : w.styles) {
        if (std::find(open.begin(), open.end(), id) == open.end()) {
          out += "<S" + std::to_string(id) + ">";
          open.push_back(id);
        }
      }
      out += w.surface;
    }
    while (!open.empty()) {
      out += "</S" + std::to_string(open.back()) + ">";
      open.pop_back();
    }
    return out;
  }

  std::map<std::string, std::string> lexicon_;
  std::vector<ReorderRule> rules_;
};

// ---------------------------------------------------------------------------
// Configuration

enum class BackendKind { nmt, llm, mock_replay, mock_dictionary };

struct BackendConfig {
  std::string name;
  BackendKind kind = BackendKind::mock_replay;
  std::string endpoint;
  /// Name of the environment variable holding the credential. The secret
  /// itself is never stored, logged or serialized.
  std::string auth_env;
  int timeout_ms = 30000;
  int retries = 2;
  int backoff_ms = 200;
  int max_in_flight = 4;
  std::string request_template;
  // Mock settings; paths are resolved against the config file's directory.
  std::string fixtures;
  std::map<std::string, std::string> dictionary;
  std::vector<ReorderRule> rules;
};

inline BackendKind backend_kind_from_string(const std::string &s) {
  if (s == "nmt") return BackendKind::nmt;
  if (s == "llm") return BackendKind::llm;
  if (s == "mock-replay") return BackendKind::mock_replay;
  if (s == "mock-dictionary") return BackendKind::mock_dictionary;
  throw Error(ErrorKind::config_error, "unknown backend kind '" + s + "'");
}

inline std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::nmt: return "nmt";
    case BackendKind::llm: return "llm";
    case BackendKind::mock_replay: return "mock-replay";
    case BackendKind::mock_dictionary: return "mock-dictionary";
  }
  return "mock-replay";
}

inline BackendConfig backend_config_from_json(const nlohmann::json &j,
                                              const std::filesystem::path &base_dir = {}) {
  BackendConfig c;
  try {
    c.name = j.at("name").get<std::string>();
    c.kind = backend_kind_from_string(j.at("kind").get<std::string>());
    c.endpoint = j.value("endpoint", "");
    c.auth_env = j.value("auth_env", "");
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.retries = j.value("retries", c.retries);
    c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.request_template = j.value("template", "");
    if (j.contains("fixtures")) {
      std::filesystem::path p = j.at("fixtures").get<std::string>();
      c.fixtures = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
    }
    if (j.contains("dictionary"))
      c.dictionary = j.at("dictionary").get<std::map<std::string, std::string>>();
    if (j.contains("rules")) {
      for (const auto &r : j.at("rules")) {
        ReorderRule rule;
        rule.name = r.value("name", "");
        rule.group = r.at("group").get<std::vector<std::string>>();
        const auto &to = r.value("to", nlohmann::json("end"));
        rule.to = to.is_number() ? std::to_string(to.get<int>()) : to.get<std::string>();
        c.rules.push_back(std::move(rule));
      }
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::config_error, std::string("backend config: ") + e.what());
  }
  if (c.name.empty()) throw Error(ErrorKind::config_error, "backend config needs a name");
  if (c.timeout_ms <= 0) throw Error(ErrorKind::config_error, "timeout_ms must be > 0");
  if (c.retries < 0) throw Error(ErrorKind::config_error, "retries must be >= 0");
  if (c.max_in_flight <= 0) throw Error(ErrorKind::config_error, "max_in_flight must be > 0");
  if ((c.kind == BackendKind::nmt || c.kind == BackendKind::llm) && c.endpoint.empty())
    throw Error(ErrorKind::config_error, "backend '" + c.name + "' needs an endpoint");
  if (c.kind == BackendKind::mock_replay && c.fixtures.empty())
    throw Error(ErrorKind::config_error, "replay backend '" + c.name + "' needs a fixtures path");
  return c;
}

/// Serialized form; carries the env-var name only.
inline nlohmann::json backend_config_to_json(const BackendConfig &c) {
  nlohmann::json j = {{"name", c.name},
                      {"kind", to_string(c.kind)},
                      {"endpoint", c.endpoint},
                      {"auth_env", c.auth_env},
                      {"timeout_ms", c.timeout_ms},
                      {"retries", c.retries},
                      {"template", c.request_template}};
  if (!c.fixtures.empty()) j["fixtures"] = c.fixtures;
  return j;
}

inline nlohmann::json read_json_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config_error, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::format_error, path.string() + ": " + e.what());
  }
}

/// Builds a mock backend. Live kinds need http_backend.hpp's factory.
inline std::unique_ptr<Backend> make_mock_backend(const BackendConfig &c) {
  if (c.kind == BackendKind::mock_replay)
    return std::make_unique<ReplayBackend>(c.name, load_replay_records(read_json_file(c.fixtures)));
  if (c.kind == BackendKind::mock_dictionary)
    return std::make_unique<DictionaryBackend>(c.name, c.dictionary, c.rules);
  throw Error(ErrorKind::config_error, "backend '" + c.name + "' is not a mock");
}

}  // namespace stylemt
