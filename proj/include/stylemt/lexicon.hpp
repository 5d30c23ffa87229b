#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylemt/error.hpp"
#include "stylemt/utf8.hpp"

namespace stylemt {

/// Word -> fixed-dimension vector table. Lookups casefold by default.
class EmbeddingLexicon {
 public:
  EmbeddingLexicon(std::size_t dimension, bool casefold_lookup = true)
      : dimension_(dimension), casefold_(casefold_lookup) {
    if (dimension == 0) throw Error(ErrorKind::invalid_argument, "lexicon dimension must be > 0");
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return table_.size(); }
  bool casefold_lookup() const { return casefold_; }
  const std::vector<std::string> &warnings() const { return warnings_; }

  /// Returns false (and keeps the existing vector) when the word is already present.
  bool insert(const std::string &word, std::vector<double> vec) {
    if (vec.size() != dimension_)
      throw Error(ErrorKind::dimension_mismatch,
                  "vector for '" + word + "' has " + std::to_string(vec.size()) +
                      " components, expected " + std::to_string(dimension_));
    return table_.emplace(key(word), std::move(vec)).second;
  }

  std::optional<std::span<const double>> lookup(std::string_view word) const {
    const auto it = table_.find(key(word));
    if (it == table_.end()) return std::nullopt;
    return std::span<const double>(it->second);
  }

  bool contains(std::string_view word) const { return table_.count(key(word)) != 0; }

  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  std::string key(std::string_view word) const {
    return casefold_ ? utf8::casefold(word) : std::string(word);
  }

  std::size_t dimension_;
  bool casefold_;
  std::unordered_map<std::string, std::vector<double>> table_;
  std::vector<std::string> warnings_;
};

/// Reads the textual word-vector format: a "count dimension" header line,
/// then one "word v1 ... vd" line per entry. Duplicate words keep their first
/// vector. A header count that disagrees with the body is only a warning.
inline EmbeddingLexicon load_lexicon(std::istream &in, bool casefold_lookup = true) {
  std::string line;
  std::size_t line_no = 0;
  auto format_error = [&](const std::string &what) {
    return Error(ErrorKind::format_error, "line " + std::to_string(line_no) + ": " + what);
  };

  if (!std::getline(in, line)) throw Error(ErrorKind::format_error, "line 1: missing header");
  ++line_no;
  long long declared_count = 0;
  long long dimension = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> declared_count >> dimension) || (header >> extra) || declared_count < 0 ||
        dimension <= 0)
      throw format_error("header must be '<count> <dimension>'");
  }

  EmbeddingLexicon lexicon(static_cast<std::size_t>(dimension), casefold_lookup);
  std::size_t body_lines = 0;
  bool any_nonzero = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++body_lines;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::vector<double> vec;
    std::string tok;
    while (fields >> tok) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception &) {
        throw format_error("'" + tok + "' is not a number");
      }
      if (used != tok.size()) throw format_error("'" + tok + "' is not a number");
      vec.push_back(v);
    }
    if (vec.size() != lexicon.dimension())
      throw Error(ErrorKind::dimension_mismatch,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(lexicon.dimension()) + " components, found " +
                      std::to_string(vec.size()));
    for (double v : vec) any_nonzero = any_nonzero || v != 0.0;
    if (!lexicon.insert(word, std::move(vec)))
      lexicon.add_warning("line " + std::to_string(line_no) + ": duplicate word '" + word +
                          "' ignored");
  }
  if (static_cast<long long>(body_lines) != declared_count)
    lexicon.add_warning("header declares " + std::to_string(declared_count) + " entries, found " +
                        std::to_string(body_lines));
  if (lexicon.size() > 0 && !any_nonzero)
    throw Error(ErrorKind::format_error, "every vector in the lexicon is zero");
  return lexicon;
}

}  // namespace stylemt
