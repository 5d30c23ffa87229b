#pragma once

// Loads a generated fixture set from the data directory and runs methods on it.

#include <filesystem>
#include <fstream>
#include <string>

#include "stylemt/stylemt.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return std::filesystem::path(STYLEMT_DATA_DIR) / "fixtures"; }

struct FixtureSet {
  std::vector<stylemt::GoldRecord> golds;
  stylemt::Job job;
  stylemt::BackendSet backends;
  stylemt::EmbeddingLexicon lexicon{1};
  std::map<std::string, stylemt::MatrixEntry> matrices;
  std::vector<stylemt::AlignmentMatrix> matrix_list;

  stylemt::RunResources resources() const {
    stylemt::RunResources r;
    r.backends = &backends;
    r.lexicon = &lexicon;
    r.matrices = &matrices;
    return r;
  }

  const stylemt::Document &document(const std::string &id) const {
    for (const auto &d : job.documents) {
      if (d.id == id) return d;
    }
    throw stylemt::Error(stylemt::ErrorKind::config_error, "no document " + id);
  }

  const stylemt::GoldRecord &gold(const std::string &id) const {
    for (const auto &g : golds) {
      if (g.id == id) return g;
    }
    throw stylemt::Error(stylemt::ErrorKind::config_error, "no gold " + id);
  }

  stylemt::StyledTranslation run(const std::string &id, stylemt::MethodKind method) const {
    return stylemt::run_one(document(id), method, job, resources());
  }

  /// Predictions of one method for every document.
  std::map<std::string, stylemt::StyledTranslation> predictions(stylemt::MethodKind method) const {
    std::map<std::string, stylemt::StyledTranslation> out;
    for (const auto &d : job.documents) out.emplace(d.id, run(d.id, method));
    return out;
  }

  stylemt::MethodReport report(stylemt::MethodKind method) const {
    return stylemt::evaluate_method(stylemt::to_string(method), predictions(method), golds);
  }
};

inline FixtureSet load(const std::string &name) {
  const auto dir = data_dir();
  FixtureSet s;
  s.golds = stylemt::golds_from_json(stylemt::read_json_file(dir / (name + "_gold.json")));
  s.job = stylemt::job_from_json(stylemt::read_json_file(dir / (name + "_job.json")));
  s.backends = stylemt::load_backend_set(dir / (name + "_backends.json"), stylemt::make_mock_backend);
  std::ifstream lex(dir / (name + "_lexicon.vec"));
  s.lexicon = stylemt::load_lexicon(lex);
  s.matrices = stylemt::matrices_from_json(stylemt::read_json_file(dir / (name + "_matrices.json")), s.job.documents);
  for (const auto &g : s.golds) s.matrix_list.push_back(s.matrices.at(g.id).matrix);
  return s;
}

inline std::set<std::string> words(const stylemt::StyledText &doc) {
  std::set<std::string> out;
  for (std::size_t k : stylemt::styled_tokens(doc)) out.insert(doc.tokens[k].surface);
  return out;
}

inline std::vector<std::vector<std::string>> span_words(const stylemt::StyledText &doc) {
  std::vector<std::vector<std::string>> out;
  for (const auto &s : doc.spans) {
    std::vector<std::string> w;
    for (std::size_t k = s.range.start; k < s.range.end; ++k) w.push_back(doc.tokens[k].surface);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace fixtures
