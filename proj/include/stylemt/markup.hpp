#pragma once

// Styled-text document model and the two inline wire formats:
//
//   numbered tags   Job cuts have also soared <S1>nearly fivefold</S1> so far ...
//   delimiters      ... Stellen ##start## im Februar ##end## erstmals ...
//
// Offsets are byte offsets into UTF-8 text. Spans are token ranges.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "stylemt/error.hpp"
#include "stylemt/utf8.hpp"

namespace stylemt {

enum class StyleKind { bold, italic, underline, highlight, hyperlink, color, font };

inline std::string_view to_string(StyleKind kind) {
  switch (kind) {
    case StyleKind::bold: return "bold";
    case StyleKind::italic: return "italic";
    case StyleKind::underline: return "underline";
    case StyleKind::highlight: return "highlight";
    case StyleKind::hyperlink: return "hyperlink";
    case StyleKind::color: return "color";
    case StyleKind::font: return "font";
  }
  return "bold";
}

inline StyleKind style_kind_from_string(std::string_view name) {
  static constexpr std::pair<std::string_view, StyleKind> kNames[] = {
      {"bold", StyleKind::bold},           {"italic", StyleKind::italic},
      {"underline", StyleKind::underline}, {"highlight", StyleKind::highlight},
      {"hyperlink", StyleKind::hyperlink}, {"color", StyleKind::color},
      {"font", StyleKind::font},
  };
  for (const auto &[n, k] : kNames) {
    if (n == name) return k;
  }
  throw Error(ErrorKind::format_error, "unknown style kind '" + std::string(name) + "'");
}

/// Kinds that carry a payload: URL, hex color value or font family.
inline bool needs_payload(StyleKind kind) {
  return kind == StyleKind::hyperlink || kind == StyleKind::color || kind == StyleKind::font;
}

struct StyleAttr {
  StyleKind kind = StyleKind::bold;
  std::optional<std::string> payload;

  friend bool operator==(const StyleAttr &, const StyleAttr &) = default;
  friend auto operator<=>(const StyleAttr &, const StyleAttr &) = default;
};

/// Insertion-ordered, duplicate-free list of attributes.
using AttrList = std::vector<StyleAttr>;

inline AttrList dedup_attrs(const AttrList &attrs) {
  AttrList out;
  for (const auto &a : attrs) {
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
  }
  return out;
}

/// Half-open token interval [start, end).
struct TokenRange {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool contains(std::size_t i) const { return i >= start && i < end; }
  friend bool operator==(const TokenRange &, const TokenRange &) = default;
};

struct StyleSpan {
  int style_id = 1;
  AttrList attrs;
  TokenRange range;

  friend bool operator==(const StyleSpan &, const StyleSpan &) = default;
};

struct Token {
  std::string surface;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  friend bool operator==(const Token &, const Token &) = default;
};

struct StyledText {
  std::string text;
  std::vector<Token> tokens;
  std::vector<StyleSpan> spans;
};

enum class AnomalyKind { unclosed_tag, orphan_close, unknown_style_id, empty_span, missing_markup };

inline std::string_view to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::unclosed_tag: return "unclosed_tag";
    case AnomalyKind::orphan_close: return "orphan_close";
    case AnomalyKind::unknown_style_id: return "unknown_style_id";
    case AnomalyKind::empty_span: return "empty_span";
    case AnomalyKind::missing_markup: return "missing_markup";
  }
  return "unknown";
}

struct ParseAnomaly {
  AnomalyKind kind = AnomalyKind::unclosed_tag;
  std::size_t location = 0;
  std::string detail;
};

enum class MarkupFormat { numbered_tags, delimiters };

/// style_id -> attributes, as carried by a source document.
using StyleTable = std::map<int, AttrList>;

// ---------------------------------------------------------------------------
// Tokenization

/// Splits on Unicode whitespace and detaches leading and trailing punctuation
/// as one token per punctuation character. Word-internal punctuation
/// ("committee's", "three-day") stays inside the word.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto d = utf8::decode(text, pos);
    if (utf8::is_space(d.cp)) {
      pos += d.length;
      continue;
    }
    const std::size_t word_start = pos;
    std::size_t word_end = pos;
    while (word_end < text.size()) {
      d = utf8::decode(text, word_end);
      if (utf8::is_space(d.cp)) break;
      word_end += d.length;
    }

    // Peel punctuation off the front.
    std::size_t core_start = word_start;
    std::vector<Token> leading;
    while (core_start < word_end) {
      d = utf8::decode(text, core_start);
      if (!utf8::is_punct(d.cp)) break;
      leading.push_back({std::string(text.substr(core_start, d.length)), core_start,
                         core_start + d.length});
      core_start += d.length;
    }

    // Then off the back, collecting in reverse.
    std::size_t core_end = word_end;
    std::vector<Token> trailing;
    while (core_end > core_start) {
      std::size_t back = core_end - 1;
      while (back > core_start && (static_cast<unsigned char>(text[back]) & 0xC0) == 0x80) --back;
      d = utf8::decode(text, back);
      if (!utf8::is_punct(d.cp)) break;
      trailing.push_back({std::string(text.substr(back, core_end - back)), back, core_end});
      core_end = back;
    }

    tokens.insert(tokens.end(), leading.begin(), leading.end());
    if (core_end > core_start) {
      tokens.push_back(
          {std::string(text.substr(core_start, core_end - core_start)), core_start, core_end});
    }
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
    pos = word_end;
  }
  return tokens;
}

inline StyledText make_plain(std::string text) {
  StyledText doc;
  doc.tokens = tokenize(text);
  doc.text = std::move(text);
  return doc;
}

inline std::vector<std::string> surfaces(const std::vector<Token> &tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto &t : tokens) out.push_back(t.surface);
  return out;
}

// ---------------------------------------------------------------------------
// Span helpers

inline StyleTable style_table(const StyledText &doc) {
  StyleTable table;
  for (const auto &span : doc.spans) table.emplace(span.style_id, span.attrs);
  return table;
}

/// style_id -> set of token indices carrying it.
inline std::map<int, std::set<std::size_t>> styled_token_sets(const StyledText &doc) {
  std::map<int, std::set<std::size_t>> out;
  for (const auto &span : doc.spans) {
    auto &set = out[span.style_id];
    for (std::size_t i = span.range.start; i < span.range.end; ++i) set.insert(i);
  }
  return out;
}

/// Union over all styles.
inline std::set<std::size_t> styled_tokens(const StyledText &doc) {
  std::set<std::size_t> out;
  for (const auto &span : doc.spans) {
    for (std::size_t i = span.range.start; i < span.range.end; ++i) out.insert(i);
  }
  return out;
}

/// Builds maximal contiguous spans from per-style token sets.
inline std::vector<StyleSpan> spans_from_sets(const std::map<int, std::set<std::size_t>> &sets,
                                              const StyleTable &styles) {
  std::vector<StyleSpan> spans;
  for (const auto &[id, tokens] : sets) {
    const auto it = styles.find(id);
    const AttrList attrs = it == styles.end() ? AttrList{} : it->second;
    std::optional<TokenRange> run;
    for (std::size_t i : tokens) {
      if (run && run->end == i) {
        run->end = i + 1;
        continue;
      }
      if (run) spans.push_back({id, attrs, *run});
      run = TokenRange{i, i + 1};
    }
    if (run) spans.push_back({id, attrs, *run});
  }
  std::sort(spans.begin(), spans.end(), [](const StyleSpan &a, const StyleSpan &b) {
    return std::tie(a.range.start, a.style_id, a.range.end) <
           std::tie(b.range.start, b.style_id, b.range.end);
  });
  return spans;
}

/// Merges overlapping and adjacent spans of the same style id.
inline void merge_spans(StyledText &doc) {
  doc.spans = spans_from_sets(styled_token_sets(doc), style_table(doc));
}

/// Throws Error(invalid_argument) on the first broken document invariant.
/// `require_attrs` is false for documents produced by parsing without a
/// style table, whose spans have not been given attributes yet.
inline void validate(const StyledText &doc, bool require_attrs = true) {
  auto fail = [](const std::string &msg) { throw Error(ErrorKind::invalid_argument, msg); };
  std::size_t prev_end = 0;
  for (std::size_t k = 0; k < doc.tokens.size(); ++k) {
    const auto &t = doc.tokens[k];
    if (t.char_start >= t.char_end || t.char_end > doc.text.size())
      fail("token " + std::to_string(k) + " has an invalid character range");
    if (k > 0 && t.char_start < prev_end) fail("token ranges overlap or are not ascending");
    if (doc.text.compare(t.char_start, t.char_end - t.char_start, t.surface) != 0)
      fail("token " + std::to_string(k) + " surface does not match the text");
    prev_end = t.char_end;
  }
  StyleTable seen;
  for (const auto &span : doc.spans) {
    if (span.style_id < 1) fail("style_id must be >= 1");
    if (span.range.start >= span.range.end) fail("empty or inverted span range");
    if (span.range.end > doc.tokens.size()) fail("span range exceeds token count");
    if (require_attrs && span.attrs.empty()) fail("span has no attributes");
    if (dedup_attrs(span.attrs).size() != span.attrs.size()) fail("duplicate span attributes");
    for (const auto &a : span.attrs) {
      if (needs_payload(a.kind) != a.payload.has_value())
        fail(std::string("payload presence wrong for ") + std::string(to_string(a.kind)));
      if (a.payload && a.payload->empty()) fail("empty payload");
    }
    auto [it, inserted] = seen.emplace(span.style_id, span.attrs);
    if (!inserted && it->second != span.attrs)
      fail("style_id " + std::to_string(span.style_id) + " used with different attributes");
  }
}

// ---------------------------------------------------------------------------
// Wire formats

namespace detail {

struct Marker {
  bool open = false;
  int id = 0;
  std::size_t length = 0;
};

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline std::optional<Marker> match_tag(std::string_view s, std::size_t pos) {
  // <S12> or </S12>
  if (s[pos] != '<') return std::nullopt;
  std::size_t p = pos + 1;
  const bool close = p < s.size() && s[p] == '/';
  if (close) ++p;
  if (p >= s.size() || s[p] != 'S') return std::nullopt;
  ++p;
  const std::size_t digits = p;
  while (p < s.size() && is_digit(s[p])) ++p;
  if (p == digits || p - digits > 6 || p >= s.size() || s[p] != '>') return std::nullopt;
  const int id = std::stoi(std::string(s.substr(digits, p - digits)));
  return Marker{!close, id, p + 1 - pos};
}

inline std::optional<Marker> match_delimiter(std::string_view s, std::size_t pos,
                                             int plain_id) {
  // ##start## / ##end## and the numbered extension ##start3## / ##end3##
  if (s.compare(pos, 2, "##") != 0) return std::nullopt;
  std::size_t p = pos + 2;
  bool open;
  if (s.compare(p, 5, "start") == 0) {
    open = true;
    p += 5;
  } else if (s.compare(p, 3, "end") == 0) {
    open = false;
    p += 3;
  } else {
    return std::nullopt;
  }
  const std::size_t digits = p;
  while (p < s.size() && is_digit(s[p])) ++p;
  if (p - digits > 6 || s.compare(p, 2, "##") != 0) return std::nullopt;
  const int id = p == digits ? plain_id : std::stoi(std::string(s.substr(digits, p - digits)));
  return Marker{open, id, p + 2 - pos};
}

inline bool ends_with_space(const std::string &s) {
  return !s.empty() && utf8::is_space(static_cast<unsigned char>(s.back()));
}

inline std::size_t skip_space(std::string_view s, std::size_t pos) {
  while (pos < s.size()) {
    const auto d = utf8::decode(s, pos);
    if (!utf8::is_space(d.cp)) break;
    pos += d.length;
  }
  return pos;
}

inline void trim_trailing_space(std::string &s) {
  while (ends_with_space(s)) s.pop_back();
}

}  // namespace detail

struct ParseOptions {
  /// Style id assigned to unnumbered `##start##` / `##end##` pairs.
  int plain_delimiter_id = 1;
};

struct ParseResult {
  StyledText doc;
  std::vector<ParseAnomaly> anomalies;
};

/// Parses a string carrying inline markup into a styled document. Never
/// throws on malformed markup: unclosed markers extend to the end of the
/// text, orphan closers are ignored, and every defect is reported as an
/// anomaly. When `styles` is non-empty, ids missing from it are reported and
/// dropped; spans of known ids receive the table's attributes.
inline ParseResult parse_tagged(std::string_view input, MarkupFormat format,
                                const StyleTable &styles = {}, ParseOptions options = {}) {
  struct Open {
    int id;
    std::size_t out_pos;
    std::size_t in_pos;
  };
  struct RawSpan {
    int id;
    std::size_t begin;  // output byte offsets
    std::size_t end;
    std::size_t in_pos;
  };

  ParseResult result;
  std::string out;
  out.reserve(input.size());
  std::vector<Open> open;
  std::vector<RawSpan> raw;

  std::size_t pos = 0;
  while (pos < input.size()) {
    const auto marker = format == MarkupFormat::numbered_tags
                            ? detail::match_tag(input, pos)
                            : detail::match_delimiter(input, pos, options.plain_delimiter_id);
    if (!marker) {
      out.push_back(input[pos]);
      ++pos;
      continue;
    }
    const std::size_t marker_pos = pos;
    pos += marker->length;
    const bool space_before = out.empty() || detail::ends_with_space(out);
    const bool space_after =
        pos < input.size() && utf8::is_space(utf8::decode(input, pos).cp);

    if (marker->open) {
      // A marker standing alone between words should not leave a double gap.
      if (space_before && space_after) pos = detail::skip_space(input, pos);
      open.push_back({marker->id, out.size(), marker_pos});
      continue;
    }

    if (detail::ends_with_space(out)) {
      const std::size_t next = detail::skip_space(input, pos);
      if (next >= input.size() || utf8::is_punct(utf8::decode(input, next).cp)) {
        detail::trim_trailing_space(out);
      } else if (space_after) {
        pos = next;
      }
    }
    auto it = std::find_if(open.rbegin(), open.rend(),
                           [&](const Open &o) { return o.id == marker->id; });
    if (it == open.rend()) {
      result.anomalies.push_back({AnomalyKind::orphan_close, marker_pos,
                                  "close marker for style " + std::to_string(marker->id) +
                                      " without a matching open marker"});
      continue;
    }
    raw.push_back({it->id, std::min(it->out_pos, out.size()), out.size(), it->in_pos});
    open.erase(std::next(it).base());
  }
  for (const auto &o : open) {
    result.anomalies.push_back({AnomalyKind::unclosed_tag, o.in_pos,
                                "open marker for style " + std::to_string(o.id) +
                                    " is never closed; extended to the end"});
    raw.push_back({o.id, o.out_pos, out.size(), o.in_pos});
  }
  std::sort(raw.begin(), raw.end(),
            [](const RawSpan &a, const RawSpan &b) { return a.in_pos < b.in_pos; });

  result.doc = make_plain(std::move(out));
  const auto &tokens = result.doc.tokens;
  for (const auto &r : raw) {
    AttrList attrs;
    if (!styles.empty()) {
      const auto it = styles.find(r.id);
      if (it == styles.end()) {
        result.anomalies.push_back(
            {AnomalyKind::unknown_style_id, r.in_pos, "style " + std::to_string(r.id)});
        continue;
      }
      attrs = it->second;
    }
    std::optional<TokenRange> range;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      if (tokens[k].char_start < r.end && tokens[k].char_end > r.begin) {
        if (!range) range = TokenRange{k, k + 1};
        range->end = k + 1;
      }
    }
    if (!range) {
      result.anomalies.push_back(
          {AnomalyKind::empty_span, r.in_pos, "style " + std::to_string(r.id) + " covers no token"});
      continue;
    }
    result.doc.spans.push_back({r.id, std::move(attrs), *range});
  }
  std::sort(result.anomalies.begin(), result.anomalies.end(),
            [](const ParseAnomaly &a, const ParseAnomaly &b) { return a.location < b.location; });
  return result;
}

struct RenderOptions {
  /// Emit `##startN##` / `##endN##` instead of the plain pair. Only
  /// meaningful for the delimiter format.
  bool numbered_delimiters = false;
};

inline bool contains_markup(std::string_view text, MarkupFormat format) {
  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    const auto m = format == MarkupFormat::numbered_tags ? detail::match_tag(text, pos)
                                                         : detail::match_delimiter(text, pos, 1);
    if (m) return true;
  }
  return false;
}

/// Inserts markup at token boundaries. For the delimiter format, spans of
/// different style ids must not overlap (overlap_error).
inline std::string render_tagged(const StyledText &doc, MarkupFormat format,
                                 RenderOptions options = {}) {
  if (contains_markup(doc.text, format))
    throw Error(ErrorKind::invalid_argument, "text already contains markup literals");

  std::vector<StyleSpan> spans = doc.spans;
  if (format == MarkupFormat::delimiters) {
    StyledText merged = doc;
    merge_spans(merged);
    spans = merged.spans;
    for (std::size_t a = 0; a < spans.size(); ++a) {
      for (std::size_t b = a + 1; b < spans.size(); ++b) {
        if (spans[a].range.start < spans[b].range.end && spans[b].range.start < spans[a].range.end)
          throw Error(ErrorKind::overlap_error,
                      "delimiter format cannot express overlapping styles " +
                          std::to_string(spans[a].style_id) + " and " +
                          std::to_string(spans[b].style_id));
      }
    }
  }

  struct Event {
    std::size_t pos;
    int order;  // closes before opens at the same offset
    long nesting;
    int id;
  };
  std::vector<Event> events;
  for (const auto &s : spans) {
    const std::size_t open_at = doc.tokens.at(s.range.start).char_start;
    const std::size_t close_at = doc.tokens.at(s.range.end - 1).char_end;
    // Outer spans open first and close last.
    events.push_back({open_at, 1, -static_cast<long>(close_at), s.style_id});
    events.push_back({close_at, 0, -static_cast<long>(open_at), s.style_id});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event &a, const Event &b) {
    return std::tie(a.pos, a.order, a.nesting) < std::tie(b.pos, b.order, b.nesting);
  });

  auto marker = [&](const Event &e) {
    const std::string id = std::to_string(e.id);
    if (format == MarkupFormat::numbered_tags) return (e.order ? "<S" : "</S") + id + ">";
    const std::string n = options.numbered_delimiters ? id : "";
    return (e.order ? "##start" : "##end") + n + "##";
  };

  std::string out;
  out.reserve(doc.text.size() + events.size() * 8);
  std::size_t cursor = 0;
  for (const auto &e : events) {
    out.append(doc.text, cursor, e.pos - cursor);
    cursor = e.pos;
    out += marker(e);
  }
  out.append(doc.text, cursor, std::string::npos);
  return out;
}

// ---------------------------------------------------------------------------
// JSON: {"text": str, "spans": [{"style_id", "attrs": [{"kind", "payload"?}],
//        "token_range": [start, end]}]}

inline void to_json(nlohmann::json &j, const StyleAttr &a) {
  j = nlohmann::json{{"kind", to_string(a.kind)}};
  if (a.payload) j["payload"] = *a.payload;
}

inline void from_json(const nlohmann::json &j, StyleAttr &a) {
  a.kind = style_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("payload") && !j.at("payload").is_null())
    a.payload = j.at("payload").get<std::string>();
  else
    a.payload.reset();
}

inline void to_json(nlohmann::json &j, const StyleSpan &s) {
  j = nlohmann::json{{"style_id", s.style_id},
                     {"attrs", s.attrs},
                     {"token_range", {s.range.start, s.range.end}}};
}

inline void from_json(const nlohmann::json &j, StyleSpan &s) {
  s.style_id = j.at("style_id").get<int>();
  s.attrs = j.at("attrs").get<AttrList>();
  const auto &r = j.at("token_range");
  if (!r.is_array() || r.size() != 2)
    throw Error(ErrorKind::format_error, "token_range must be [start, end]");
  s.range = {r[0].get<std::size_t>(), r[1].get<std::size_t>()};
}

inline nlohmann::json styled_to_json(const StyledText &doc) {
  return nlohmann::json{{"text", doc.text}, {"spans", doc.spans}};
}

/// Reads and validates a styled document. Tokens are recomputed from text.
inline StyledText styled_from_json(const nlohmann::json &j, bool require_attrs = true) {
  StyledText doc;
  try {
    doc = make_plain(j.at("text").get<std::string>());
    if (j.contains("spans")) doc.spans = j.at("spans").get<std::vector<StyleSpan>>();
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::format_error, std::string("styled document: ") + e.what());
  }
  validate(doc, require_attrs);
  return doc;
}

inline nlohmann::json anomaly_to_json(const ParseAnomaly &a) {
  return nlohmann::json{{"kind", to_string(a.kind)}, {"location", a.location}, {"detail", a.detail}};
}

}  // namespace stylemt
