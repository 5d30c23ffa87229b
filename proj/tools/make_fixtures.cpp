// Expands data/fixtures/authoring.json into gold records, replay fixtures,
// attention matrices, a toy lexicon, backend configs and job files.
//
//   make_fixtures <authoring.json> <out-dir>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stylemt/stylemt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stylemt;

namespace {

struct Entry {
  std::string id;
  StyledText source;
  StyledText reference;
  std::vector<StyledText> alt_golds;
  AlignmentMap gold_map;
  json raw;
};

StyledText parse_clean(const std::string &tagged, const StyleTable &styles, const std::string &what) {
  auto r = parse_tagged(tagged, MarkupFormat::numbered_tags, styles);
  if (!r.anomalies.empty())
    throw Error(ErrorKind::format_error, what + ": markup anomaly " + std::string(to_string(r.anomalies[0].kind)));
  return r.doc;
}

// Resolves surface pairs to token indices: each source word takes the next
// unused styled token with that surface; each target word the next unused
// styled gold token, or a used one for many-to-one links.
AlignmentMap resolve_pairs(const Entry &e, const json &pairs) {
  AlignmentMap map(e.source.tokens.size(), e.reference.tokens.size());
  const auto src_styled = styled_tokens(e.source);
  const auto tgt_styled = styled_tokens(e.reference);
  std::set<std::size_t> used_src, used_tgt;
  for (const auto &p : pairs) {
    const auto s = p.at(0).get<std::string>();
    const auto t = p.at(1).get<std::string>();
    std::optional<std::size_t> j, i, i_reuse;
    for (std::size_t k : src_styled)
      if (!used_src.count(k) && e.source.tokens[k].surface == s) { j = k; break; }
    for (std::size_t k : tgt_styled) {
      if (e.reference.tokens[k].surface != t) continue;
      if (!used_tgt.count(k)) { i = k; break; }
      if (!i_reuse) i_reuse = k;
    }
    if (!i) i = i_reuse;
    if (!j || !i) throw Error(ErrorKind::format_error, e.id + ": cannot place gold pair " + s + " -> " + t);
    used_src.insert(*j);
    used_tgt.insert(*i);
    map.add(*j, *i);
  }
  std::set<std::size_t> covered;
  for (const auto &[j, i] : map.pairs()) covered.insert(i);
  if (covered != tgt_styled || used_src != src_styled)
    throw Error(ErrorKind::format_error, e.id + ": gold pairs do not cover the styled tokens");
  return map;
}

json matrix_for(const Entry &e) {
  const std::size_t rows = e.source.tokens.size(), cols = e.reference.tokens.size();
  std::vector<std::vector<double>> w(rows, std::vector<double>(cols, 1.0 / static_cast<double>(cols)));
  for (std::size_t j = 0; j < rows; ++j) {
    const auto targets = e.gold_map.targets_of(j);
    if (targets.empty()) continue;
    std::fill(w[j].begin(), w[j].end(), 0.0);
    for (std::size_t i : targets) w[j][i] = 1.0 / static_cast<double>(targets.size());
  }
  auto j = matrix_to_json(AlignmentMatrix(surfaces(e.source.tokens), surfaces(e.reference.tokens), w));
  j["id"] = e.id;
  j["target_text"] = e.reference.text;
  return j;
}

void write_json(const fs::path &path, const json &j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::config_error, "cannot write " + path.string());
}

void emit_set(const std::string &name, const json &entries, const fs::path &out_dir) {
  std::vector<Entry> set;
  for (const auto &raw : entries) {
    Entry e;
    e.raw = raw;
    e.id = raw.at("id").get<std::string>();
    StyleTable styles;
    for (const auto &[k, v] : raw.at("styles").items()) styles[std::stoi(k)] = v.get<AttrList>();
    e.source = parse_clean(raw.at("source").get<std::string>(), styles, e.id + " source");
    e.reference = parse_clean(raw.at("reference").get<std::string>(), styles, e.id + " reference");
    for (const auto &alt : raw.value("alt_golds", json::array()))
      e.alt_golds.push_back(parse_clean(alt.get<std::string>(), styles, e.id + " alt gold"));
    e.gold_map = resolve_pairs(e, raw.at("gold_pairs"));
    set.push_back(std::move(e));
  }

  // Gold records and attention matrices.
  auto golds = json::array();
  auto matrices = json::array();
  for (const auto &e : set) {
    auto alts = json::array();
    for (const auto &a : e.alt_golds) alts.push_back(styled_to_json(a));
    golds.push_back({{"id", e.id},
                     {"source", styled_to_json(e.source)},
                     {"gold_target", styled_to_json(e.reference)},
                     {"alt_targets", alts},
                     {"gold_map", map_to_json(e.gold_map).at("pairs")},
                     {"notes", e.raw.value("notes", "")}});
    matrices.push_back(matrix_for(e));
  }
  write_json(out_dir / (name + "_gold.json"), golds);
  write_json(out_dir / (name + "_matrices.json"), matrices);

  // Toy lexicon: one basis vector per gold word pair; a word's vector sums
  // the concepts it takes part in.
  std::vector<std::string> concepts;
  std::map<std::string, std::set<std::size_t>> word_concepts;
  for (const auto &e : set) {
    for (const auto &[j, i] : e.gold_map.pairs()) {
      const auto s = utf8::casefold(e.source.tokens[j].surface);
      const auto t = utf8::casefold(e.reference.tokens[i].surface);
      const auto key = s + '\t' + t;
      auto it = std::find(concepts.begin(), concepts.end(), key);
      const std::size_t c = static_cast<std::size_t>(it - concepts.begin());
      if (it == concepts.end()) concepts.push_back(key);
      word_concepts[s].insert(c);
      word_concepts[t].insert(c);
    }
  }
  {
    std::ofstream out(out_dir / (name + "_lexicon.vec"), std::ios::binary);
    out << word_concepts.size() << ' ' << concepts.size() << '\n';
    for (const auto &[word, cs] : word_concepts) {
      out << word;
      for (std::size_t c = 0; c < concepts.size(); ++c) out << ' ' << (cs.count(c) ? 1 : 0);
      out << '\n';
    }
  }

  // Replay fixtures, built with the same request builders the pipelines use.
  const LanguagePair langs;
  const LlmSettings settings;
  std::map<std::string, json> records;
  std::set<std::string> methods;
  bool uniform = true;
  auto record = [&](const std::string &digest, const std::string &response, const std::string &note) {
    auto [it, fresh] = records.emplace(digest, json{{"request_digest", digest}, {"response", response}, {"note", note}});
    if (!fresh && it->second.at("response") != response)
      throw Error(ErrorKind::format_error, "conflicting responses for one request (" + note + ")");
  };
  std::set<std::string> first_methods;
  for (std::size_t n = 0; n < set.size(); ++n) {
    const auto &e = set[n];
    std::set<std::string> have = {"attention"};
    if (e.raw.contains("nmt_response")) {
      have.insert("nmt_tags");
      record(request_digest(build_nmt_tags_request(e.source, langs)), e.raw.at("nmt_response"),
             "nmt_tags " + e.id);
    }
    if (e.raw.contains("llm_response")) {
      have.insert("llm_delimiters");
      record(request_digest(build_llm_delimiters_request(e.source, settings)), e.raw.at("llm_response"),
             "llm_delimiters " + e.id);
    }
    if (e.raw.contains("hybrid_response")) {
      have.insert("hybrid");
      const std::string translation = e.raw.value("hybrid_translation", e.reference.text);
      record(request_digest(build_hybrid_translation_request(e.source, langs)), translation,
             "hybrid translation " + e.id);
      record(request_digest(build_hybrid_map_request(e.source, translation, settings)),
             e.raw.at("hybrid_response"), "hybrid unigram map " + e.id);
    }
    if (n == 0) first_methods = have;
    else if (have != first_methods) uniform = false;
    methods.insert(have.begin(), have.end());
  }
  auto replay = json::array();
  for (auto &[digest, r] : records) replay.push_back(r);
  write_json(out_dir / (name + "_replay.json"), replay);

  write_json(out_dir / (name + "_backends.json"),
             json{{"backends",
                   {{{"name", "nmt"}, {"kind", "mock-replay"}, {"fixtures", name + "_replay.json"}},
                    {{"name", "llm"}, {"kind", "mock-replay"}, {"fixtures", name + "_replay.json"}}}}});

  auto docs = json::array();
  for (const auto &e : set) docs.push_back({{"id", e.id}, {"source", styled_to_json(e.source)}});
  json job = {{"documents", docs}};
  if (uniform) {
    auto list = json::array();
    for (auto m : kAllMethods)
      if (methods.count(to_string(m))) list.push_back(to_string(m));
    job["methods"] = list;
  }
  write_json(out_dir / (name + "_job.json"), job);
}

}  // namespace

int main(int argc, char **argv) {
  if (argc != 3) {
    std::cerr << "usage: make_fixtures <authoring.json> <out-dir>\n";
    return 2;
  }
  try {
    const auto authoring = read_json_file(argv[1]);
    fs::create_directories(argv[2]);
    for (const auto &[name, entries] : authoring.at("sets").items()) emit_set(name, entries, argv[2]);
  } catch (const std::exception &e) {
    std::cerr << "make_fixtures: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
