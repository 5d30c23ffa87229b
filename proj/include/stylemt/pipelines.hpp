#pragma once

// The four style-transfer methods and span projection.
//
//   attention       attention_align over a source x target matrix, then project
//   nmt_tags        <Sn> markup through a markup-preserving translation service
//   llm_delimiters  ##start##/##end## markup through a chat completion
//   hybrid          plain NMT translation, then an LLM unigram map, then project

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "stylemt/alignment.hpp"
#include "stylemt/attention.hpp"
#include "stylemt/backends.hpp"
#include "stylemt/error.hpp"
#include "stylemt/markup.hpp"
#include "stylemt/prompts.hpp"
#include "stylemt/utf8.hpp"

namespace stylemt {

enum class MethodKind { attention, nmt_tags, llm_delimiters, hybrid };

inline constexpr MethodKind kAllMethods[] = {MethodKind::attention, MethodKind::nmt_tags,
                                             MethodKind::llm_delimiters, MethodKind::hybrid};

inline std::string to_string(MethodKind m) {
  switch (m) {
    case MethodKind::attention: return "attention";
    case MethodKind::nmt_tags: return "nmt_tags";
    case MethodKind::llm_delimiters: return "llm_delimiters";
    case MethodKind::hybrid: return "hybrid";
  }
  return "attention";
}

inline MethodKind method_from_string(const std::string &s) {
  for (auto m : kAllMethods) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorKind::config_error, "unknown method '" + s + "'");
}

enum class OccurrenceTiebreak { relative_position, last_occurrence, first_occurrence };
enum class UnalignedPolicy { drop, warn_drop };

struct ProjectionPolicy {
  OccurrenceTiebreak occurrence_tiebreak = OccurrenceTiebreak::relative_position;
  UnalignedPolicy unaligned_styled_word = UnalignedPolicy::warn_drop;
  bool merge_adjacent = true;
};

inline nlohmann::json policy_to_json(const ProjectionPolicy &p) {
  static constexpr const char *kTie[] = {"relative_position", "last_occurrence", "first_occurrence"};
  return nlohmann::json{
      {"occurrence_tiebreak", kTie[static_cast<int>(p.occurrence_tiebreak)]},
      {"unaligned_styled_word", p.unaligned_styled_word == UnalignedPolicy::drop ? "drop" : "warn_drop"},
      {"merge_adjacent", p.merge_adjacent}};
}

inline OccurrenceTiebreak tiebreak_from_string(const std::string &s) {
  if (s == "relative_position") return OccurrenceTiebreak::relative_position;
  if (s == "last_occurrence") return OccurrenceTiebreak::last_occurrence;
  if (s == "first_occurrence") return OccurrenceTiebreak::first_occurrence;
  throw Error(ErrorKind::config_error, "unknown occurrence tie-break '" + s + "'");
}

inline UnalignedPolicy unaligned_from_string(const std::string &s) {
  if (s == "drop") return UnalignedPolicy::drop;
  if (s == "warn_drop") return UnalignedPolicy::warn_drop;
  throw Error(ErrorKind::config_error, "unknown unaligned policy '" + s + "'");
}

/// Missing keys keep the values already in `p`.
inline void policy_from_json(const nlohmann::json &j, ProjectionPolicy &p) {
  if (j.contains("occurrence_tiebreak"))
    p.occurrence_tiebreak = tiebreak_from_string(j.at("occurrence_tiebreak").get<std::string>());
  if (j.contains("unaligned_styled_word"))
    p.unaligned_styled_word = unaligned_from_string(j.at("unaligned_styled_word").get<std::string>());
  if (j.contains("merge_adjacent")) p.merge_adjacent = j.at("merge_adjacent").get<bool>();
}

struct StyledTranslation {
  MethodKind method = MethodKind::attention;
  StyledText target;
  /// Empty (but correctly sized) for the markup-driven methods.
  AlignmentMap map;
  std::vector<ParseAnomaly> anomalies;
  std::vector<std::string> warnings;
};

inline nlohmann::json translation_to_json(const StyledTranslation &t) {
  auto pairs = nlohmann::json::array();
  for (const auto &[j, i] : t.map.pairs()) pairs.push_back({j, i});
  auto anomalies = nlohmann::json::array();
  for (const auto &a : t.anomalies) anomalies.push_back(anomaly_to_json(a));
  return nlohmann::json{{"method", to_string(t.method)},
                        {"target", styled_to_json(t.target)},
                        {"map", pairs},
                        {"anomalies", anomalies},
                        {"warnings", t.warnings}};
}

inline StyledTranslation translation_from_json(const nlohmann::json &j) {
  StyledTranslation t;
  try {
    t.method = method_from_string(j.at("method").get<std::string>());
    t.target = styled_from_json(j.at("target"), false);
    // Source length is not stored; size the map to the largest source index seen.
    std::size_t rows = 0;
    for (const auto &p : j.value("map", nlohmann::json::array()))
      rows = std::max(rows, p.at(0).get<std::size_t>() + 1);
    t.map = map_from_pairs_json(j.value("map", nlohmann::json::array()), rows, t.target.tokens.size());
    t.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::format_error, std::string("result entry: ") + e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Projection

struct Projection {
  StyledText target;
  std::vector<std::string> warnings;
};

/// Gives every target token the styles of the styled source tokens aligned
/// to it, then regroups per style id into contiguous spans. A style may end
/// up as several disjoint spans.
inline Projection project_styles(const StyledText &source, StyledText target,
                                 const AlignmentMap &map, const ProjectionPolicy &policy) {
  if (map.source_len() != source.tokens.size() || map.target_len() != target.tokens.size())
    throw Error(ErrorKind::dimension_mismatch,
                "alignment is " + std::to_string(map.source_len()) + "x" +
                    std::to_string(map.target_len()) + " but sentences have " +
                    std::to_string(source.tokens.size()) + " and " +
                    std::to_string(target.tokens.size()) + " tokens");
  Projection out;
  const StyleTable styles = style_table(source);

  std::set<std::size_t> reported;
  for (const auto &span : source.spans) {
    for (std::size_t j = span.range.start; j < span.range.end; ++j) {
      if (map.targets_of(j).empty() && policy.unaligned_styled_word == UnalignedPolicy::warn_drop &&
          reported.insert(j).second)
        out.warnings.push_back("unaligned styled source word '" + source.tokens[j].surface +
                               "' (" + std::to_string(j) + ") dropped");
    }
  }

  target.spans.clear();
  if (policy.merge_adjacent) {
    std::map<int, std::set<std::size_t>> sets;
    for (const auto &span : source.spans) {
      for (std::size_t j = span.range.start; j < span.range.end; ++j) {
        for (std::size_t i : map.targets_of(j)) sets[span.style_id].insert(i);
      }
    }
    target.spans = spans_from_sets(sets, styles);
  } else {
    for (const auto &span : source.spans) {
      std::map<int, std::set<std::size_t>> one;
      for (std::size_t j = span.range.start; j < span.range.end; ++j) {
        for (std::size_t i : map.targets_of(j)) one[span.style_id].insert(i);
      }
      for (auto &s : spans_from_sets(one, styles)) target.spans.push_back(std::move(s));
    }
  }
  out.target = std::move(target);
  return out;
}

// ---------------------------------------------------------------------------
// Shared helpers

struct LanguagePair {
  std::string source = "en";
  std::string target = "de";
};

/// Joins tokens with single spaces, attaching closing punctuation to the
/// preceding token.
inline std::string detokenize(const std::vector<std::string> &tokens) {
  std::string out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto &t = tokens[k];
    const bool closing = utf8::is_punct_only(t) && t.find_first_of(".,;:!?)]}") == 0;
    if (k > 0 && !closing) out.push_back(' ');
    out += t;
  }
  return out;
}

/// One anomaly per source style id that produced no span in the output.
inline void report_missing_styles(const StyledText &source, const StyledText &target,
                                  std::vector<ParseAnomaly> &anomalies) {
  const auto produced = styled_token_sets(target);
  for (const auto &[id, attrs] : style_table(source)) {
    if (!produced.count(id))
      anomalies.push_back({AnomalyKind::missing_markup, 0,
                           "style " + std::to_string(id) + " is absent from the response"});
  }
}

// ---------------------------------------------------------------------------
// attention

inline StyledTranslation run_attention_method(const StyledText &source, const AlignmentMatrix &matrix,
                                              const EmbeddingLexicon &lexicon,
                                              const AttentionParams &params,
                                              const ProjectionPolicy &policy,
                                              const std::optional<std::string> &target_text = {}) {
  if (matrix.source_tokens() != surfaces(source.tokens))
    throw Error(ErrorKind::tokenization_mismatch,
                "attention matrix source tokens differ from the source sentence tokens");
  StyledText target = make_plain(target_text ? *target_text : detokenize(matrix.target_tokens()));
  if (surfaces(target.tokens) != matrix.target_tokens())
    throw Error(ErrorKind::tokenization_mismatch,
                "attention matrix target tokens differ from the translation tokens");

  StyledTranslation out;
  out.method = MethodKind::attention;
  out.map = attention_align(matrix, styled_tokens(source), lexicon, params);
  auto projected = project_styles(source, std::move(target), out.map, policy);
  out.target = std::move(projected.target);
  out.warnings = std::move(projected.warnings);
  return out;
}

// ---------------------------------------------------------------------------
// nmt_tags

inline TranslationRequest build_nmt_tags_request(const StyledText &source, const LanguagePair &langs) {
  return {render_tagged(source, MarkupFormat::numbered_tags), langs.source, langs.target, true};
}

inline StyledTranslation run_nmt_tags_method(const StyledText &source, const Backend &nmt,
                                             const ProjectionPolicy &policy,
                                             const LanguagePair &langs = {}) {
  const std::string response = nmt.translate(build_nmt_tags_request(source, langs));
  auto parsed = parse_tagged(response, MarkupFormat::numbered_tags, style_table(source));

  StyledTranslation out;
  out.method = MethodKind::nmt_tags;
  out.target = std::move(parsed.doc);
  out.anomalies = std::move(parsed.anomalies);
  if (policy.merge_adjacent) merge_spans(out.target);
  report_missing_styles(source, out.target, out.anomalies);
  out.map = AlignmentMap(source.tokens.size(), out.target.tokens.size());
  return out;
}

// ---------------------------------------------------------------------------
// llm_delimiters

struct LlmSettings {
  PromptSet prompts;
  int max_output_tokens = 1024;
};

/// The plain ##start##/##end## pair cannot tell styles apart, so sources with
/// more than one style id use the numbered extension.
inline bool needs_numbered_delimiters(const StyledText &source) {
  return style_table(source).size() > 1;
}

inline CompletionRequest build_llm_delimiters_request(const StyledText &source,
                                                      const LlmSettings &settings) {
  RenderOptions options;
  options.numbered_delimiters = needs_numbered_delimiters(source);
  const std::string rendered = render_tagged(source, MarkupFormat::delimiters, options);
  return {settings.prompts.llm_system, fill_template(settings.prompts.llm_user, {rendered, "", ""}),
          settings.max_output_tokens};
}

inline StyledTranslation run_llm_delimiters_method(const StyledText &source, const Backend &llm,
                                                   const ProjectionPolicy &policy,
                                                   const LlmSettings &settings = {}) {
  const auto request = build_llm_delimiters_request(source, settings);
  const std::string response = llm.complete(request);

  const StyleTable styles = style_table(source);
  ParseOptions options;
  options.plain_delimiter_id = styles.empty() ? 1 : styles.begin()->first;
  auto parsed = parse_tagged(response, MarkupFormat::delimiters, styles, options);

  StyledTranslation out;
  out.method = MethodKind::llm_delimiters;
  out.target = std::move(parsed.doc);
  out.anomalies = std::move(parsed.anomalies);
  if (needs_numbered_delimiters(source))
    out.warnings.push_back("several styles in one sentence: used numbered delimiters");
  if (policy.merge_adjacent) merge_spans(out.target);
  report_missing_styles(source, out.target, out.anomalies);
  out.map = AlignmentMap(source.tokens.size(), out.target.tokens.size());
  return out;
}

// ---------------------------------------------------------------------------
// hybrid

namespace detail {

inline bool is_open_quote(char32_t cp) {
  return cp == U'\'' || cp == U'"' || cp == U'`' || cp == 0x2018 || cp == 0x201C || cp == 0x201E ||
         cp == 0x201A;
}

inline bool is_close_quote(char32_t cp) {
  return cp == U'\'' || cp == U'"' || cp == 0x2019 || cp == 0x201D || cp == 0x201C;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Extracts the word list from a response such as
///   maps: {'fiel', 'unter', '10', 'Millionen', 'im', 'Februar'}
/// Braces, brackets or a bare comma list are accepted, with single, double,
/// backtick or typographic quotes. Throws map_parse_error when no `maps:`
/// list can be found.
inline std::vector<std::string> parse_unigram_maps(std::string_view response) {
  const std::string folded = utf8::casefold(response);
  std::size_t at = std::string::npos;
  for (std::size_t pos = folded.find("maps"); pos != std::string::npos;
       pos = folded.find("maps", pos + 1)) {
    std::size_t p = pos + 4;
    while (p < folded.size() && (folded[p] == ' ' || folded[p] == '\t')) ++p;
    if (p < folded.size() && folded[p] == ':') {
      at = p + 1;
      break;
    }
  }
  if (at == std::string::npos)
    throw Error(ErrorKind::map_parse_error, "response has no 'maps:' list");

  std::size_t p = at;
  while (p < response.size() && (response[p] == ' ' || response[p] == '\t')) ++p;
  std::size_t end;
  if (p < response.size() && (response[p] == '{' || response[p] == '[')) {
    const char close = response[p] == '{' ? '}' : ']';
    ++p;
    end = response.find(close, p);
    // A closing bracket can also sit inside a quoted word; take the last one on the line.
    const auto eol = response.find('\n', p);
    const auto last = response.substr(0, eol).rfind(close);
    if (last != std::string_view::npos && last >= p) end = last;
    if (end == std::string_view::npos) end = eol == std::string_view::npos ? response.size() : eol;
  } else {
    end = response.find('\n', p);
    if (end == std::string_view::npos) end = response.size();
  }
  const std::string_view body = response.substr(p, end - p);

  std::vector<std::string> items;
  std::size_t q = 0;
  while (q < body.size()) {
    while (q < body.size() && (body[q] == ' ' || body[q] == '\t' || body[q] == ',')) ++q;
    if (q >= body.size()) break;
    const auto first = utf8::decode(body, q);
    if (detail::is_open_quote(first.cp)) {
      // Closing quote is the last quote before the next separator.
      std::size_t r = q + first.length;
      std::size_t close_at = std::string_view::npos;
      std::size_t close_len = 0;
      while (r < body.size()) {
        const auto d = utf8::decode(body, r);
        if (detail::is_close_quote(d.cp)) {
          std::size_t after = r + d.length;
          while (after < body.size() && (body[after] == ' ' || body[after] == '\t')) ++after;
          if (after >= body.size() || body[after] == ',') {
            close_at = r;
            close_len = d.length;
            break;
          }
        }
        r += d.length;
      }
      if (close_at == std::string_view::npos)
        throw Error(ErrorKind::map_parse_error, "unterminated quoted word in 'maps:' list");
      items.push_back(std::string(body.substr(q + first.length, close_at - q - first.length)));
      q = close_at + close_len;
    } else {
      const auto comma = body.find(',', q);
      const auto stop = comma == std::string_view::npos ? body.size() : comma;
      auto word = detail::trim(body.substr(q, stop - q));
      if (!word.empty()) items.push_back(std::move(word));
      q = stop;
    }
  }
  return items;
}

/// {'fell', 'below', ...}; words containing a single quote use double quotes.
inline std::string format_unigram_set(const std::vector<std::string> &words) {
  std::string out = "{";
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k > 0) out += ", ";
    const char q = words[k].find('\'') == std::string::npos ? '\'' : '"';
    out += q;
    out += words[k];
    out += q;
  }
  out += "}";
  return out;
}

/// Lower-cased, with leading and trailing punctuation removed.
inline std::string match_key(std::string_view word) {
  std::string key;
  for (const auto &t : tokenize(word)) {
    if (!utf8::is_punct_only(t.surface)) key += (key.empty() ? "" : " ") + t.surface;
  }
  if (key.empty()) key = std::string(word);
  return utf8::casefold(key);
}

/// Target positions holding `word`: exact surface matches, or failing that,
/// matches after casefolding and stripping punctuation.
inline std::vector<std::size_t> find_occurrences(const std::vector<Token> &target, std::string_view word) {
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i].surface == word) hits.push_back(i);
  }
  if (!hits.empty()) return hits;
  const std::string key = match_key(word);
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (match_key(target[i].surface) == key) hits.push_back(i);
  }
  return hits;
}

/// Chooses among repeated target words. Occurrences not yet claimed by an
/// earlier unigram are preferred.
inline std::size_t choose_occurrence(const std::vector<std::size_t> &hits, std::size_t source_index,
                                     std::size_t source_len, std::size_t target_len,
                                     OccurrenceTiebreak tiebreak, const std::set<std::size_t> &claimed) {
  std::vector<std::size_t> pool;
  for (std::size_t i : hits) {
    if (!claimed.count(i)) pool.push_back(i);
  }
  if (pool.empty()) pool = hits;
  switch (tiebreak) {
    case OccurrenceTiebreak::first_occurrence: return pool.front();
    case OccurrenceTiebreak::last_occurrence: return pool.back();
    case OccurrenceTiebreak::relative_position: break;
  }
  const double anchor = relative_position(source_index, source_len);
  std::size_t best = pool.front();
  double best_d = std::abs(relative_position(best, target_len) - anchor);
  for (std::size_t i : pool) {
    const double d = std::abs(relative_position(i, target_len) - anchor);
    if (d < best_d - 1e-12) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

/// Styled source indices in source order, duplicates of the same word kept.
inline std::vector<std::size_t> unigram_indices(const StyledText &source) {
  const auto s = styled_tokens(source);
  return {s.begin(), s.end()};
}

inline TranslationRequest build_hybrid_translation_request(const StyledText &source,
                                                           const LanguagePair &langs) {
  return {source.text, langs.source, langs.target, false};
}

inline CompletionRequest build_hybrid_map_request(const StyledText &source, const std::string &translation,
                                                  const LlmSettings &settings) {
  std::vector<std::string> words;
  for (std::size_t j : unigram_indices(source)) words.push_back(source.tokens[j].surface);
  return {settings.prompts.hybrid_system,
          fill_template(settings.prompts.hybrid_user, {source.text, translation, format_unigram_set(words)}),
          settings.max_output_tokens};
}

/// Builds the alignment from the returned words, paired positionally with
/// the unigram list.
inline AlignmentMap map_from_unigrams(const StyledText &source, const StyledText &target,
                                      const std::vector<std::string> &returned, OccurrenceTiebreak tiebreak,
                                      std::vector<std::string> &warnings) {
  const auto indices = unigram_indices(source);
  if (returned.size() != indices.size())
    warnings.push_back("length_mismatch: " + std::to_string(indices.size()) + " unigrams but " +
                       std::to_string(returned.size()) + " mapped words");
  AlignmentMap map(source.tokens.size(), target.tokens.size());
  std::set<std::size_t> claimed;
  const std::size_t n = std::min(indices.size(), returned.size());
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = indices[k];
    const auto hits = find_occurrences(target.tokens, returned[k]);
    if (hits.empty()) {
      warnings.push_back("hallucinated_word: '" + returned[k] + "' for '" + source.tokens[j].surface +
                         "' is not in the translation");
      continue;
    }
    const std::size_t i =
        choose_occurrence(hits, j, source.tokens.size(), target.tokens.size(), tiebreak, claimed);
    claimed.insert(i);
    map.add(j, i);
  }
  return map;
}

inline StyledTranslation run_hybrid_method(const StyledText &source, const Backend &nmt, const Backend &llm,
                                           const ProjectionPolicy &policy, const LlmSettings &settings = {},
                                           const LanguagePair &langs = {}) {
  StyledTranslation out;
  out.method = MethodKind::hybrid;
  const std::string translation = nmt.translate(build_hybrid_translation_request(source, langs));
  StyledText target = make_plain(translation);
  if (source.spans.empty()) {
    out.map = AlignmentMap(source.tokens.size(), target.tokens.size());
    out.target = std::move(target);
    return out;
  }
  const auto response = llm.complete(build_hybrid_map_request(source, translation, settings));
  const auto returned = parse_unigram_maps(response);
  out.map = map_from_unigrams(source, target, returned, policy.occurrence_tiebreak, out.warnings);
  auto projected = project_styles(source, std::move(target), out.map, policy);
  out.target = std::move(projected.target);
  out.warnings.insert(out.warnings.end(), projected.warnings.begin(), projected.warnings.end());
  return out;
}

}  // namespace stylemt
