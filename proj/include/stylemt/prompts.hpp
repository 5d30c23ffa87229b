#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "stylemt/error.hpp"

namespace stylemt {

/// Prompt texts for the two LLM-backed methods. The built-in defaults are
/// identical to the files shipped in data/prompts/; load_prompts() reads a
/// directory laid out the same way.
struct PromptSet {
  std::string llm_system =
      "You are efficient in language translation. We have a task where we have English "
      "statements with some delimiters.\n"
      "##start## -> marks the start of a special style around this text.\n"
      "##end## -> marks the end of a special style around the text.\n"
      "You have to perform the language translation keeping the info of special styles intact "
      "for the semantic meaning of the part of the sentence.\n"
      "Translate the prompts to German while retaining the styling info for the part of "
      "sentences, learn from the example how delimiters are used and converted in the "
      "translated text.";
  std::string llm_user = "{source}";
  std::string hybrid_system =
      "You are an expert in multiple languages. You have to provide unigram mappings of the "
      "input words. The input also contains source and target sentence in English and German "
      "respectively. The unigram mappings to be provided by you should be words from target "
      "sentence.";
  std::string hybrid_user = "Source: {source}\nTarget: {target}\nUnigram: {unigrams}";
};

inline constexpr std::string_view kPromptFiles[] = {
    "llm_delimiters_system.txt", "llm_delimiters_user.txt", "hybrid_system.txt",
    "hybrid_user.txt"};

/// Reads a template file; a single trailing newline is not part of the prompt.
inline std::string read_prompt_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config_error, "cannot open prompt template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  if (!text.empty() && text.back() == '\r') text.pop_back();
  return text;
}

inline PromptSet load_prompts(const std::filesystem::path &dir) {
  PromptSet p;
  p.llm_system = read_prompt_file(dir / kPromptFiles[0]);
  p.llm_user = read_prompt_file(dir / kPromptFiles[1]);
  p.hybrid_system = read_prompt_file(dir / kPromptFiles[2]);
  p.hybrid_user = read_prompt_file(dir / kPromptFiles[3]);
  return p;
}

struct TemplateValues {
  std::string source;
  std::string target;
  std::string unigrams;
};

/// Substitutes {source}, {target} and {unigrams}. Other braces pass through.
inline std::string fill_template(std::string_view tpl, const TemplateValues &values) {
  std::string out;
  out.reserve(tpl.size() + values.source.size() + values.target.size());
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    if (tpl[pos] == '{') {
      const auto close = tpl.find('}', pos);
      if (close != std::string_view::npos) {
        const auto key = tpl.substr(pos + 1, close - pos - 1);
        const std::string *value = key == "source"     ? &values.source
                                   : key == "target"   ? &values.target
                                   : key == "unigrams" ? &values.unigrams
                                                       : nullptr;
        if (value != nullptr) {
          out += *value;
          pos = close + 1;
          continue;
        }
      }
    }
    out.push_back(tpl[pos++]);
  }
  return out;
}

}  // namespace stylemt
