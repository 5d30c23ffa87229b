#pragma once

// Scoring of styled translations against gold annotations: exact-set
// correctness, span P/R/F1, contiguity flags, AER, threshold sweeps and the
// per-method comparison matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stylemt/alignment.hpp"
#include "stylemt/attention.hpp"
#include "stylemt/error.hpp"
#include "stylemt/ibm1.hpp"
#include "stylemt/markup.hpp"
#include "stylemt/pipelines.hpp"

namespace stylemt {

struct GoldRecord {
  std::string id;
  StyledText source;
  StyledText gold_target;
  /// Gold styling for other acceptable translations of the same source.
  std::vector<StyledText> alt_targets;
  std::optional<AlignmentMap> gold_map;
  std::string notes;
};

inline GoldRecord gold_from_json(const nlohmann::json &j) {
  GoldRecord g;
  try {
    g.id = j.at("id").is_string() ? j.at("id").get<std::string>() : std::to_string(j.at("id").get<long>());
    g.source = styled_from_json(j.at("source"));
    g.gold_target = styled_from_json(j.at("gold_target"));
    for (const auto &alt : j.value("alt_targets", nlohmann::json::array()))
      g.alt_targets.push_back(styled_from_json(alt));
    if (j.contains("gold_map"))
      g.gold_map = map_from_pairs_json(j.at("gold_map"), g.source.tokens.size(), g.gold_target.tokens.size());
    g.notes = j.value("notes", "");
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::format_error, std::string("gold record: ") + e.what());
  }
  return g;
}

inline std::vector<GoldRecord> golds_from_json(const nlohmann::json &j) {
  if (!j.is_array()) throw Error(ErrorKind::format_error, "gold fixture must be a JSON array");
  std::vector<GoldRecord> out;
  std::set<std::string> ids;
  for (const auto &r : j) {
    out.push_back(gold_from_json(r));
    if (!ids.insert(out.back().id).second)
      throw Error(ErrorKind::format_error, "duplicate gold id '" + out.back().id + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contiguity

/// True iff the tokens carrying `style_id` form one unbroken run.
inline bool contiguity(const StyledText &doc, int style_id) {
  const auto sets = styled_token_sets(doc);
  const auto it = sets.find(style_id);
  if (it == sets.end())
    throw Error(ErrorKind::unknown_style_id, "style " + std::to_string(style_id) + " not present");
  const auto &s = it->second;
  return *s.rbegin() - *s.begin() + 1 == s.size();
}

/// Every style in the document is contiguous (vacuously true without styles).
inline bool all_contiguous(const StyledText &doc) {
  for (const auto &[id, tokens] : styled_token_sets(doc)) {
    if (!contiguity(doc, id)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Sentence scoring

struct SentenceScore {
  std::string id;
  std::string method;
  bool contiguous_source = true;
  /// Contiguity of the gold styling on this method's translation.
  bool contiguous_target = true;
  bool predicted_contiguous = true;
  bool correct = false;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when the sentence could not be scored; such entries stay out of aggregates.
  std::optional<std::string> excluded;
};

/// Gold styling whose tokenization equals the prediction's, if any.
inline const StyledText *matching_gold(const StyledTranslation &pred, const GoldRecord &gold) {
  const auto tokens = surfaces(pred.target.tokens);
  if (surfaces(gold.gold_target.tokens) == tokens) return &gold.gold_target;
  for (const auto &alt : gold.alt_targets) {
    if (surfaces(alt.tokens) == tokens) return &alt;
  }
  return nullptr;
}

inline double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

inline SentenceScore score_sentence(const StyledTranslation &pred, const GoldRecord &gold,
                                    std::string method_label = {}) {
  const StyledText *ref = matching_gold(pred, gold);
  if (ref == nullptr)
    throw Error(ErrorKind::tokenization_mismatch,
                "sentence " + gold.id + ": prediction tokens match no gold translation");

  SentenceScore s;
  s.id = gold.id;
  s.method = method_label.empty() ? to_string(pred.method) : std::move(method_label);
  s.contiguous_source = all_contiguous(gold.source);
  s.contiguous_target = all_contiguous(*ref);
  s.predicted_contiguous = all_contiguous(pred.target);

  const auto predicted = styled_token_sets(pred.target);
  const auto expected = styled_token_sets(*ref);
  s.correct = predicted == expected;

  std::size_t n_pred = 0, n_gold = 0, n_hit = 0;
  for (const auto &[id, toks] : predicted) {
    n_pred += toks.size();
    const auto g = expected.find(id);
    if (g == expected.end()) continue;
    for (std::size_t t : toks) n_hit += g->second.count(t);
  }
  for (const auto &[id, toks] : expected) n_gold += toks.size();

  if (n_pred == 0 && n_gold == 0) {
    s.precision = s.recall = s.f1 = 1.0;
  } else {
    s.precision = n_pred == 0 ? 0.0 : static_cast<double>(n_hit) / static_cast<double>(n_pred);
    s.recall = n_gold == 0 ? 0.0 : static_cast<double>(n_hit) / static_cast<double>(n_gold);
    s.f1 = f1_of(s.precision, s.recall);
  }
  return s;
}

struct MethodReport {
  std::string method;
  std::vector<SentenceScore> sentences;
  std::size_t scored = 0;
  std::size_t correct = 0;
  std::size_t excluded = 0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
};

inline void finalize(MethodReport &report) {
  report.scored = report.correct = report.excluded = 0;
  double p = 0, r = 0, f = 0;
  for (const auto &s : report.sentences) {
    if (s.excluded) {
      ++report.excluded;
      continue;
    }
    ++report.scored;
    report.correct += s.correct ? 1 : 0;
    p += s.precision;
    r += s.recall;
    f += s.f1;
  }
  const double n = report.scored == 0 ? 1.0 : static_cast<double>(report.scored);
  report.mean_precision = p / n;
  report.mean_recall = r / n;
  report.mean_f1 = f / n;
}

/// Scores predictions keyed by gold id. Every gold id must have exactly one
/// prediction and vice versa (fixture_set_mismatch otherwise).
inline MethodReport evaluate_method(const std::string &method,
                                    const std::map<std::string, StyledTranslation> &predictions,
                                    const std::vector<GoldRecord> &golds) {
  std::set<std::string> gold_ids;
  for (const auto &g : golds) gold_ids.insert(g.id);
  std::set<std::string> pred_ids;
  for (const auto &[id, p] : predictions) pred_ids.insert(id);
  if (gold_ids != pred_ids)
    throw Error(ErrorKind::fixture_set_mismatch,
                "results for method '" + method + "' cover a different sentence set than the gold fixture");

  MethodReport report;
  report.method = method;
  for (const auto &g : golds) {
    try {
      report.sentences.push_back(score_sentence(predictions.at(g.id), g, method));
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::tokenization_mismatch) throw;
      SentenceScore s;
      s.id = g.id;
      s.method = method;
      s.excluded = e.what();
      report.sentences.push_back(std::move(s));
    }
  }
  finalize(report);
  return report;
}

// ---------------------------------------------------------------------------
// AER

struct AerScore {
  double precision = 0.0;
  double recall = 0.0;
  double aer = 0.0;
};

/// Sure-only alignment error rate: 1 - 2|A n S| / (|A| + |S|).
inline AerScore aer(const AlignmentMap &pred, const AlignmentMap &gold) {
  if (pred.source_len() != gold.source_len() || pred.target_len() != gold.target_len())
    throw Error(ErrorKind::dimension_mismatch, "AER needs alignments over the same sentence pair");
  std::size_t hit = 0;
  for (const auto &p : pred.pairs()) hit += gold.pairs().count(p);
  const double a = static_cast<double>(pred.size());
  const double s = static_cast<double>(gold.size());
  AerScore out;
  out.precision = pred.empty() ? (gold.empty() ? 1.0 : 0.0) : static_cast<double>(hit) / a;
  out.recall = gold.empty() ? (pred.empty() ? 1.0 : 0.0) : static_cast<double>(hit) / s;
  out.aer = a + s == 0.0 ? 0.0 : 1.0 - 2.0 * static_cast<double>(hit) / (a + s);
  return out;
}

/// Keeps only pairs whose source index is in `rows`.
inline AlignmentMap restrict_rows(const AlignmentMap &map, const std::set<std::size_t> &rows) {
  AlignmentMap out(map.source_len(), map.target_len());
  for (const auto &[j, i] : map.pairs()) {
    if (rows.count(j)) out.add(j, i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Threshold sweep

struct SweepRow {
  double threshold = 0.0;
  double mean_f1 = 0.0;
  double mean_aer = 0.0;
  std::size_t pair_count = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  /// Pair counts never increase with the threshold.
  bool monotone = true;
};

/// Runs the attention method over every gold record once per threshold.
/// `matrices[k]` belongs to `golds[k]`. AER uses the styled source rows only,
/// against gold maps where present.
inline SweepTable threshold_sweep(const std::vector<GoldRecord> &golds,
                                  const std::vector<AlignmentMatrix> &matrices,
                                  const EmbeddingLexicon &lexicon, std::size_t k,
                                  const std::vector<double> &thresholds,
                                  const ProjectionPolicy &policy = {},
                                  OovPolicy oov = OovPolicy::permissive) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw Error(ErrorKind::invalid_argument, "sweep thresholds must be sorted ascending");
  if (golds.size() != matrices.size())
    throw Error(ErrorKind::dimension_mismatch, "one attention matrix per gold record is required");

  SweepTable table;
  for (double tau : thresholds) {
    AttentionParams params{k, tau, oov};
    std::map<std::string, StyledTranslation> preds;
    SweepRow row;
    row.threshold = tau;
    double aer_sum = 0.0;
    std::size_t aer_n = 0;
    for (std::size_t n = 0; n < golds.size(); ++n) {
      auto pred = run_attention_method(golds[n].source, matrices[n], lexicon, params, policy);
      row.pair_count += pred.map.size();
      if (golds[n].gold_map && golds[n].gold_map->target_len() == pred.map.target_len()) {
        const auto rows = styled_tokens(golds[n].source);
        aer_sum += aer(restrict_rows(pred.map, rows), restrict_rows(*golds[n].gold_map, rows)).aer;
        ++aer_n;
      }
      preds.emplace(golds[n].id, std::move(pred));
    }
    row.mean_f1 = evaluate_method("attention", preds, golds).mean_f1;
    row.mean_aer = aer_n == 0 ? 0.0 : aer_sum / static_cast<double>(aer_n);
    if (!table.rows.empty() && row.pair_count > table.rows.back().pair_count) table.monotone = false;
    table.rows.push_back(row);
  }
  return table;
}

/// Parses "start:stop:step" into an inclusive ascending list.
inline std::vector<double> parse_sweep_range(const std::string &spec) {
  double start, stop, step;
  char c1, c2;
  std::istringstream in(spec);
  if (!(in >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0.0 || stop < start)
    throw Error(ErrorKind::config_error, "sweep range must be start:stop:step with step > 0");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(start + static_cast<double>(k) * step);
  return out;
}

inline std::string render_sweep(const SweepTable &t) {
  std::ostringstream out;
  out << "threshold,mean_f1,mean_aer,pairs\n" << std::fixed;
  for (const auto &r : t.rows)
    out << std::setprecision(2) << r.threshold << ',' << std::setprecision(4) << r.mean_f1 << ','
        << r.mean_aer << ',' << r.pair_count << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// IBM1 baseline

/// Trains IBM Model 1 on the gold (source, target) pairs and projects styles
/// through its Viterbi-style alignments.
inline std::map<std::string, StyledTranslation> ibm1_predictions(const std::vector<GoldRecord> &golds,
                                                                 int iterations,
                                                                 const ProjectionPolicy &policy = {}) {
  std::vector<SentencePair> corpus;
  for (const auto &g : golds)
    corpus.emplace_back(surfaces(g.source.tokens), surfaces(g.gold_target.tokens));
  const auto model = ibm1_train(corpus, iterations);
  std::map<std::string, StyledTranslation> out;
  for (std::size_t n = 0; n < golds.size(); ++n) {
    StyledTranslation t;
    t.method = MethodKind::attention;
    t.map = ibm1_align(model, corpus[n].first, corpus[n].second);
    auto projected = project_styles(golds[n].source, make_plain(golds[n].gold_target.text), t.map, policy);
    t.target = std::move(projected.target);
    t.warnings = std::move(projected.warnings);
    out.emplace(golds[n].id, std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Comparison matrix

inline std::string style_label(const StyledText &doc) {
  std::string label;
  for (const auto &[id, attrs] : style_table(doc)) {
    for (const auto &a : attrs) {
      if (!label.empty()) label += '+';
      label += to_string(a.kind);
    }
  }
  return label;
}

inline std::string styled_phrase(const StyledText &doc) {
  std::vector<std::string> parts;
  for (const auto &span : doc.spans) {
    std::vector<std::string> words;
    for (std::size_t k = span.range.start; k < span.range.end; ++k) words.push_back(doc.tokens[k].surface);
    parts.push_back(detokenize(words));
  }
  std::string out;
  for (const auto &p : parts) out += (out.empty() ? "" : " | ") + p;
  return out;
}

struct ComparisonTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> footer;
};

inline std::string_view method_title(const std::string &method) {
  if (method == "attention") return "Attention";
  if (method == "nmt_tags") return "NMT";
  if (method == "llm_delimiters") return "LLM";
  if (method == "hybrid") return "Hybrid";
  return method;
}

/// One row per gold sentence; per method a Cont. (y/n) and OK (✓/X) column.
inline ComparisonTable build_comparison(const std::vector<GoldRecord> &golds,
                                        const std::vector<MethodReport> &reports) {
  std::set<std::string> gold_ids;
  for (const auto &g : golds) gold_ids.insert(g.id);
  for (const auto &r : reports) {
    std::set<std::string> ids;
    for (const auto &s : r.sentences) ids.insert(s.id);
    if (ids != gold_ids)
      throw Error(ErrorKind::fixture_set_mismatch,
                  "report for '" + r.method + "' covers a different fixture set");
  }

  ComparisonTable t;
  t.header = {"#", "Text Style", "Phrase(s)", "Eng. Cont."};
  for (const auto &r : reports) {
    const std::string title(method_title(r.method));
    t.header.push_back(title + " Cont.");
    t.header.push_back(title + " OK");
  }
  if (reports.empty()) return t;

  for (const auto &g : golds) {
    std::vector<std::string> row = {g.id, style_label(g.source), styled_phrase(g.source),
                                    all_contiguous(g.source) ? "y" : "n"};
    for (const auto &r : reports) {
      const auto it = std::find_if(r.sentences.begin(), r.sentences.end(),
                                   [&](const SentenceScore &s) { return s.id == g.id; });
      if (it->excluded) {
        row.push_back("-");
        row.push_back("-");
      } else {
        row.push_back(it->contiguous_target ? "y" : "n");
        row.push_back(it->correct ? "✓" : "X");
      }
    }
    t.rows.push_back(std::move(row));
  }
  t.footer = {"", "", "correct", ""};
  for (const auto &r : reports) {
    t.footer.push_back("");
    t.footer.push_back(std::to_string(r.correct) + "/" + std::to_string(r.scored));
  }
  return t;
}

namespace detail {

inline std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); pos += utf8::decode(s, pos).length) ++n;
  return n;
}

inline std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline std::string render_comparison_text(const ComparisonTable &t) {
  std::vector<std::size_t> width(t.header.size(), 0);
  auto widen = [&](const std::vector<std::string> &row) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c)
      width[c] = std::max(width[c], detail::display_width(row[c]));
  };
  widen(t.header);
  for (const auto &r : t.rows) widen(r);
  widen(t.footer);

  std::ostringstream out;
  auto line = [&](const std::vector<std::string> &row) {
    std::string text;
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < row.size() ? row[c] : "";
      text += cell + std::string(width[c] - detail::display_width(cell), ' ');
      if (c + 1 < width.size()) text += " | ";
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  };
  line(t.header);
  std::string rule;
  for (std::size_t c = 0; c < width.size(); ++c) {
    rule += std::string(width[c], '-');
    if (c + 1 < width.size()) rule += "-+-";
  }
  out << rule << '\n';
  for (const auto &r : t.rows) line(r);
  if (!t.footer.empty()) {
    out << rule << '\n';
    line(t.footer);
  }
  return out.str();
}

inline std::string render_comparison_csv(const ComparisonTable &t) {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string> &row) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << detail::csv_field(row[c]);
    out << '\n';
  };
  line(t.header);
  for (const auto &r : t.rows) line(r);
  if (!t.footer.empty()) line(t.footer);
  return out.str();
}

/// Per-sentence report for one method.
inline std::string render_report_text(const MethodReport &r) {
  std::ostringstream out;
  out << "method: " << r.method << '\n' << std::fixed << std::setprecision(3);
  out << "id\tcont_src\tcont_tgt\tcorrect\tP\tR\tF1\n";
  for (const auto &s : r.sentences) {
    if (s.excluded) {
      out << s.id << "\texcluded: " << *s.excluded << '\n';
      continue;
    }
    out << s.id << '\t' << (s.contiguous_source ? 'y' : 'n') << '\t' << (s.contiguous_target ? 'y' : 'n')
        << '\t' << (s.correct ? "yes" : "no") << '\t' << s.precision << '\t' << s.recall << '\t' << s.f1
        << '\n';
  }
  out << "correct " << r.correct << '/' << r.scored << ", excluded " << r.excluded << ", mean P "
      << r.mean_precision << ", mean R " << r.mean_recall << ", mean F1 " << r.mean_f1 << '\n';
  return out.str();
}

inline nlohmann::json report_to_json(const MethodReport &r) {
  auto sentences = nlohmann::json::array();
  for (const auto &s : r.sentences) {
    nlohmann::json e = {{"id", s.id},
                        {"contiguous_source", s.contiguous_source},
                        {"contiguous_target", s.contiguous_target},
                        {"predicted_contiguous", s.predicted_contiguous},
                        {"correct", s.correct},
                        {"precision", s.precision},
                        {"recall", s.recall},
                        {"f1", s.f1}};
    if (s.excluded) e["excluded"] = *s.excluded;
    sentences.push_back(std::move(e));
  }
  return nlohmann::json{{"method", r.method},     {"sentences", sentences},
                        {"scored", r.scored},     {"correct", r.correct},
                        {"excluded", r.excluded}, {"mean_precision", r.mean_precision},
                        {"mean_recall", r.mean_recall}, {"mean_f1", r.mean_f1}};
}

}  // namespace stylemt
