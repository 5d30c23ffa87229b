// stylemt command-line front end.
//
// Exit status: 0 ok, 1 --expect mismatch, 2 configuration or input error,
// 3 backend failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stylemt/http_backend.hpp"
#include "stylemt/stylemt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stylemt;

namespace {

constexpr int kExitMismatch = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string &text, const std::string &out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorKind::config_error, "cannot write " + out_path);
}

EmbeddingLexicon open_lexicon(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config_error, "cannot open " + path);
  auto lex = load_lexicon(in);
  for (const auto &w : lex.warnings()) std::cerr << "stylemt: warning: " << path << ": " << w << '\n';
  return lex;
}

OovPolicy oov_from_string(const std::string &s) {
  if (s == "permissive") return OovPolicy::permissive;
  if (s == "strict") return OovPolicy::strict;
  throw Error(ErrorKind::config_error, "oov policy must be permissive or strict");
}

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

std::string run_id() {
  std::random_device rd;
  std::ostringstream ss;
  ss << std::hex << std::setfill('0') << std::setw(8) << rd() << std::setw(8) << rd();
  return ss.str();
}

// ---------------------------------------------------------------------------

struct TranslateArgs {
  std::string in, backends, lexicon, matrices, out, prompts, oov, tiebreak, unaligned;
  std::vector<std::string> methods;
  std::optional<double> threshold;
  std::optional<std::size_t> k;
  std::optional<bool> merge;
  unsigned jobs = 1;
};

int cmd_translate(const TranslateArgs &a) {
  Job job = job_from_json(read_json_file(a.in));
  if (!a.methods.empty()) {
    job.methods.clear();
    for (const auto &m : a.methods) job.methods.push_back(method_from_string(m));
  }
  if (job.methods.empty()) throw Error(ErrorKind::config_error, "no method given (--method or job \"methods\")");
  if (a.threshold) job.attention.threshold = *a.threshold;
  if (a.k) job.attention.k = *a.k;
  if (!a.oov.empty()) job.attention.oov = oov_from_string(a.oov);
  if (!a.tiebreak.empty()) job.policy.occurrence_tiebreak = tiebreak_from_string(a.tiebreak);
  if (!a.unaligned.empty()) job.policy.unaligned_styled_word = unaligned_from_string(a.unaligned);
  if (a.merge) job.policy.merge_adjacent = *a.merge;

  bool needs_backends = false, needs_attention = false;
  for (auto m : job.methods) (m == MethodKind::attention ? needs_attention : needs_backends) = true;

  BackendSet backends;
  std::optional<EmbeddingLexicon> lexicon;
  std::map<std::string, MatrixEntry> matrices;
  RunResources res;
  if (needs_backends) {
    if (a.backends.empty()) throw Error(ErrorKind::config_error, "--backends is required for this method");
    backends = load_backend_set(a.backends, make_backend);
    res.backends = &backends;
  }
  if (needs_attention) {
    if (a.lexicon.empty() || a.matrices.empty())
      throw Error(ErrorKind::config_error, "attention needs --lexicon and --matrices");
    lexicon.emplace(open_lexicon(a.lexicon));
    matrices = matrices_from_json(read_json_file(a.matrices), job.documents);
    res.lexicon = &*lexicon;
    res.matrices = &matrices;
  }
  if (!a.prompts.empty()) res.llm.prompts = load_prompts(a.prompts);

  const std::string started = iso_now();
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_job(job, res, a.jobs);
  const double total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  emit(results_to_json(results).dump(2) + "\n", a.out);

  int status = 0;
  auto timings = json::array();
  for (const auto &r : results) {
    timings.push_back({{"id", r.id}, {"method", to_string(r.method)}, {"elapsed_ms", r.elapsed_ms}});
    if (r.translation) {
      const auto &t = *r.translation;
      std::cerr << r.id << '\t' << to_string(r.method) << "\tok\tspans=" << t.target.spans.size()
                << " anomalies=" << t.anomalies.size() << " warnings=" << t.warnings.size() << '\n';
    }
    if (r.error) {
      std::cerr << "stylemt: error[" << to_string(*r.error_kind) << "]: " << r.id << "/" << to_string(r.method)
                << ": " << *r.error << '\n';
      const bool backend = Error(*r.error_kind, "").is_backend_failure();
      status = std::max(status, backend ? kExitBackend : kExitConfig);
    }
  }
  if (!a.out.empty()) {
    json meta = {{"run_id", run_id()}, {"started", started}, {"total_ms", total_ms}, {"workers", a.jobs},
                 {"timings", timings}};
    emit(meta.dump(2) + "\n", a.out + ".meta.json");
  }
  return status;
}

// ---------------------------------------------------------------------------

struct AlignArgs {
  std::string matrix, lexicon, styled, in, oov = "permissive";
  double threshold = 0.5;
  std::size_t k = 3;
};

int cmd_align(const AlignArgs &a) {
  const auto mj = read_json_file(a.matrix);
  const auto matrix = matrix_from_json(mj.is_array() ? mj.at(0) : mj);
  const auto lexicon = open_lexicon(a.lexicon);
  std::set<std::size_t> rows;
  if (!a.in.empty()) {
    const auto j = read_json_file(a.in);
    rows = styled_tokens(styled_from_json(j.contains("source") ? j.at("source") : j));
  } else {
    std::istringstream ss(a.styled);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        rows.insert(std::stoul(part));
      } catch (const std::exception &) {
        throw Error(ErrorKind::config_error, "--styled takes comma-separated token indices");
      }
    }
  }
  const auto map = attention_align(matrix, rows, lexicon, {a.k, a.threshold, oov_from_string(a.oov)});
  std::cout << map_to_json(map).dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

std::vector<MethodReport> reports_for(const std::vector<GoldRecord> &golds, const std::vector<std::string> &files) {
  std::map<std::string, std::map<std::string, StyledTranslation>> all;
  for (const auto &f : files) {
    for (auto &[method, preds] : results_from_json(read_json_file(f))) {
      auto &slot = all[method];
      for (auto &[id, t] : preds) slot.insert_or_assign(id, std::move(t));
    }
  }
  std::vector<MethodReport> reports;
  for (auto m : kAllMethods) {
    const auto it = all.find(to_string(m));
    if (it != all.end()) reports.push_back(evaluate_method(it->first, it->second, golds));
  }
  return reports;
}

struct EvaluateArgs {
  std::string gold, out, sweep, matrices, lexicon;
  std::size_t k = 3;
  std::vector<std::string> results;
  int ibm1 = 0;
  bool as_json = false;
};

std::vector<AlignmentMatrix> matrices_for(const std::vector<GoldRecord> &golds, const std::string &path) {
  std::vector<Document> docs;
  for (const auto &g : golds) docs.push_back({g.id, g.source});
  const auto entries = matrices_from_json(read_json_file(path), docs);
  std::vector<AlignmentMatrix> out;
  for (const auto &g : golds) {
    const auto it = entries.find(g.id);
    if (it == entries.end()) throw Error(ErrorKind::config_error, "no attention matrix for '" + g.id + "'");
    out.push_back(it->second.matrix);
  }
  return out;
}

int cmd_evaluate(const EvaluateArgs &a) {
  const auto golds = golds_from_json(read_json_file(a.gold));
  if (!a.sweep.empty()) {
    if (a.matrices.empty() || a.lexicon.empty())
      throw Error(ErrorKind::config_error, "--sweep needs --matrices and --lexicon");
    const auto table = threshold_sweep(golds, matrices_for(golds, a.matrices), open_lexicon(a.lexicon), a.k,
                                       parse_sweep_range(a.sweep));
    emit(render_sweep(table), a.out);
    return 0;
  }
  auto reports = reports_for(golds, a.results);
  if (a.ibm1 > 0) reports.push_back(evaluate_method("ibm1", ibm1_predictions(golds, a.ibm1), golds));
  if (reports.empty()) throw Error(ErrorKind::config_error, "nothing to evaluate");
  std::string text;
  if (a.as_json) {
    auto list = json::array();
    for (const auto &r : reports) list.push_back(report_to_json(r));
    text = list.dump(2) + "\n";
  } else {
    for (const auto &r : reports) text += render_report_text(r) + "\n";
  }
  emit(text, a.out);
  return 0;
}

struct CompareArgs {
  std::string gold, out, expect;
  std::vector<std::string> results;
  bool csv = false;
};

int cmd_compare(const CompareArgs &a) {
  const auto golds = golds_from_json(read_json_file(a.gold));
  const auto table = build_comparison(golds, reports_for(golds, a.results));
  const std::string csv = render_comparison_csv(table);
  emit(a.csv ? csv : render_comparison_text(table), a.out);
  if (!a.expect.empty() && slurp(a.expect) != csv) {
    std::cerr << "stylemt: comparison differs from " << a.expect << '\n';
    return kExitMismatch;
  }
  return 0;
}

struct SweepArgs {
  std::string gold, matrices, lexicon, thresholds = "0:1:0.1", out, oov = "permissive";
  std::size_t k = 3;
};

int cmd_sweep(const SweepArgs &a) {
  const auto golds = golds_from_json(read_json_file(a.gold));
  const auto matrices = matrices_for(golds, a.matrices);
  const auto lexicon = open_lexicon(a.lexicon);
  const auto table = threshold_sweep(golds, matrices, lexicon, a.k, parse_sweep_range(a.thresholds), {},
                                     oov_from_string(a.oov));
  emit(render_sweep(table), a.out);
  if (!table.monotone) std::cerr << "stylemt: warning: pair count is not monotone in the threshold\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Style-preserving machine translation toolkit"};
  app.require_subcommand(1);

  TranslateArgs ta;
  auto *tr = app.add_subcommand("translate-styled", "Translate styled documents with one or more methods");
  tr->add_option("--in", ta.in, "Job file")->required();
  tr->add_option("--method", ta.methods, "attention|nmt_tags|llm_delimiters|hybrid (comma list or repeated)")
      ->delimiter(',');
  tr->add_option("--backends", ta.backends, "Backend config file");
  tr->add_option("--lexicon", ta.lexicon, "Word-vector file for attention");
  tr->add_option("--matrices", ta.matrices, "Attention matrices JSON");
  tr->add_option("--threshold", ta.threshold, "Cosine threshold");
  tr->add_option("--k", ta.k, "Top-k candidates per row");
  tr->add_option("--oov", ta.oov, "permissive|strict");
  tr->add_option("--tiebreak", ta.tiebreak, "relative_position|first_occurrence|last_occurrence");
  tr->add_option("--unaligned", ta.unaligned, "drop|warn_drop");
  tr->add_flag("--merge-adjacent,!--no-merge-adjacent", ta.merge, "Merge touching spans of one style");
  tr->add_option("--prompts", ta.prompts, "Prompt template directory");
  tr->add_option("--jobs", ta.jobs, "Parallel workers")->check(CLI::Range(1u, 256u));
  tr->add_option("--out", ta.out, "Result file (stdout if omitted)");

  AlignArgs aa;
  auto *al = app.add_subcommand("align", "Attention-based word alignment for one matrix");
  al->add_option("--matrix", aa.matrix, "Matrix JSON")->required();
  al->add_option("--lexicon", aa.lexicon, "Word-vector file")->required();
  auto *styled = al->add_option("--styled", aa.styled, "Styled source token indices, e.g. 0,2");
  al->add_option("--in", aa.in, "Styled source document JSON")->excludes(styled);
  al->add_option("--threshold", aa.threshold, "Cosine threshold a candidate must exceed");
  al->add_option("--k", aa.k, "Top-k candidates per row");
  al->add_option("--oov", aa.oov, "permissive|strict");

  EvaluateArgs ea;
  auto *ev = app.add_subcommand("evaluate", "Score result files against gold annotations");
  ev->add_option("--gold", ea.gold, "Gold fixture JSON")->required();
  ev->add_option("--results", ea.results, "Result file(s)");
  ev->add_option("--ibm1", ea.ibm1, "Also score an IBM Model 1 baseline with this many EM iterations");
  ev->add_option("--sweep", ea.sweep, "Attention threshold sweep start:stop:step instead of scoring results");
  ev->add_option("--matrices", ea.matrices, "Attention matrices for --sweep");
  ev->add_option("--lexicon", ea.lexicon, "Word-vector file for --sweep");
  ev->add_option("--k", ea.k, "Top-k candidates per row for --sweep");
  ev->add_flag("--json", ea.as_json, "Write the report as JSON");
  ev->add_option("--out", ea.out, "Report file (stdout if omitted)");

  CompareArgs ca;
  auto *cm = app.add_subcommand("compare", "Per-sentence comparison matrix across methods");
  cm->add_option("--gold", ca.gold, "Gold fixture JSON")->required();
  cm->add_option("--results", ca.results, "Result file(s)")->required();
  cm->add_flag("--csv", ca.csv, "Write CSV instead of an aligned text table");
  cm->add_option("--expect", ca.expect, "CSV the comparison must equal");
  cm->add_option("--out", ca.out, "Table file (stdout if omitted)");

  SweepArgs sa;
  auto *sw = app.add_subcommand("sweep", "Attention threshold sweep");
  sw->add_option("--gold", sa.gold, "Gold fixture JSON")->required();
  sw->add_option("--matrices", sa.matrices, "Attention matrices JSON")->required();
  sw->add_option("--lexicon", sa.lexicon, "Word-vector file")->required();
  sw->add_option("--thresholds", sa.thresholds, "Threshold range start:stop:step");
  sw->add_option("--k", sa.k, "Top-k candidates per row");
  sw->add_option("--oov", sa.oov, "permissive|strict");
  sw->add_option("--out", sa.out, "Table file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*tr) return cmd_translate(ta);
    if (*al) {
      if (aa.in.empty() && aa.styled.empty()) throw Error(ErrorKind::config_error, "align needs --styled or --in");
      return cmd_align(aa);
    }
    if (*ev) return cmd_evaluate(ea);
    if (*cm) return cmd_compare(ca);
    if (*sw) return cmd_sweep(sa);
  } catch (const Error &e) {
    std::cerr << "stylemt: error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return e.is_backend_failure() ? kExitBackend : kExitConfig;
  } catch (const std::exception &e) {
    std::cerr << "stylemt: error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
