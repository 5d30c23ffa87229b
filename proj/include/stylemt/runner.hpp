#pragma once

// Batch execution of styled-translation jobs: job files, backend registries,
// per-sentence fan-out and the result file format.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stylemt/alignment.hpp"
#include "stylemt/attention.hpp"
#include "stylemt/backends.hpp"
#include "stylemt/error.hpp"
#include "stylemt/lexicon.hpp"
#include "stylemt/markup.hpp"
#include "stylemt/pipelines.hpp"

namespace stylemt {

struct Document {
  std::string id;
  StyledText source;
};

struct Job {
  std::vector<Document> documents;
  std::vector<MethodKind> methods;
  ProjectionPolicy policy;
  AttentionParams attention;
  LanguagePair langs;
  std::string nmt_backend = "nmt";
  std::string llm_backend = "llm";
};

/// Job file: {"documents": [...], "methods": [...], "policy": {...},
/// "backends": {"nmt": name, "llm": name}, "source_lang", "target_lang",
/// "threshold", "k", "oov"}. A document is either a styled-document object
/// or a gold record (its "source" is used). A bare array is read as the
/// document list.
inline Job job_from_json(const nlohmann::json &j) {
  Job job;
  try {
    const auto &docs = j.is_array() ? j : j.at("documents");
    std::size_t n = 0;
    for (const auto &d : docs) {
      ++n;
      Document doc;
      if (d.contains("id"))
        doc.id = d.at("id").is_string() ? d.at("id").get<std::string>() : std::to_string(d.at("id").get<long>());
      else
        doc.id = std::to_string(n);
      doc.source = styled_from_json(d.contains("source") ? d.at("source") : d);
      job.documents.push_back(std::move(doc));
    }
    if (j.is_object()) {
      if (j.contains("methods")) {
        for (const auto &m : j.at("methods")) job.methods.push_back(method_from_string(m.get<std::string>()));
      } else if (j.contains("method")) {
        job.methods.push_back(method_from_string(j.at("method").get<std::string>()));
      }
      if (j.contains("policy")) policy_from_json(j.at("policy"), job.policy);
      if (j.contains("backends")) {
        job.nmt_backend = j.at("backends").value("nmt", job.nmt_backend);
        job.llm_backend = j.at("backends").value("llm", job.llm_backend);
      }
      job.langs.source = j.value("source_lang", job.langs.source);
      job.langs.target = j.value("target_lang", job.langs.target);
      job.attention.threshold = j.value("threshold", job.attention.threshold);
      job.attention.k = j.value("k", job.attention.k);
      if (j.value("oov", "permissive") == "strict") job.attention.oov = OovPolicy::strict;
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::config_error, std::string("job file: ") + e.what());
  }
  return job;
}

class BackendSet {
 public:
  void add(std::unique_ptr<Backend> backend) {
    const std::string name = backend->name();
    backends_[name] = std::move(backend);
  }

  const Backend &get(const std::string &name) const {
    const auto it = backends_.find(name);
    if (it == backends_.end()) throw Error(ErrorKind::config_error, "no backend named '" + name + "'");
    return *it->second;
  }

  bool contains(const std::string &name) const { return backends_.count(name) != 0; }

 private:
  std::map<std::string, std::unique_ptr<Backend>> backends_;
};

/// Backend config file: an array of backend objects or {"backends": [...]}.
/// `factory` turns one config into a backend (make_backend or make_mock_backend).
template <typename Factory>
BackendSet load_backend_set(const std::filesystem::path &path, Factory factory) {
  const auto j = read_json_file(path);
  const auto &list = j.is_array() ? j : j.at("backends");
  BackendSet set;
  for (const auto &entry : list) set.add(factory(backend_config_from_json(entry, path.parent_path())));
  return set;
}

/// Attention matrices keyed by document id: a list of interchange records,
/// one record, or a sidecar export {"metadata": {...}, "records": [...]}.
/// Entries without "id" are matched to documents by position. An optional
/// "target_text" gives the exact translation string.
struct MatrixEntry {
  AlignmentMatrix matrix;
  std::optional<std::string> target_text;
};

inline std::map<std::string, MatrixEntry> matrices_from_json(const nlohmann::json &j,
                                                             const std::vector<Document> &docs) {
  const auto list = j.is_array() ? j : j.contains("records") ? j.at("records") : nlohmann::json::array({j});
  std::map<std::string, MatrixEntry> out;
  for (std::size_t n = 0; n < list.size(); ++n) {
    const auto &e = list[n];
    std::string id;
    if (e.contains("id"))
      id = e.at("id").is_string() ? e.at("id").get<std::string>() : std::to_string(e.at("id").get<long>());
    else if (n < docs.size())
      id = docs[n].id;
    else
      throw Error(ErrorKind::config_error, "attention matrix " + std::to_string(n) + " has no document");
    std::optional<std::string> text;
    if (e.contains("target_text")) text = e.at("target_text").get<std::string>();
    out.emplace(id, MatrixEntry{matrix_from_json(e), text});
  }
  return out;
}

struct RunResources {
  const BackendSet *backends = nullptr;
  const EmbeddingLexicon *lexicon = nullptr;
  const std::map<std::string, MatrixEntry> *matrices = nullptr;
  LlmSettings llm;
};

struct ResultEntry {
  std::string id;
  MethodKind method = MethodKind::attention;
  std::optional<StyledTranslation> translation;
  std::optional<std::string> error;
  std::optional<ErrorKind> error_kind;
  double elapsed_ms = 0.0;
};

inline StyledTranslation run_one(const Document &doc, MethodKind method, const Job &job,
                                 const RunResources &res) {
  switch (method) {
    case MethodKind::attention: {
      if (res.lexicon == nullptr) throw Error(ErrorKind::config_error, "attention method needs a lexicon");
      if (res.matrices == nullptr) throw Error(ErrorKind::config_error, "attention method needs matrices");
      const auto it = res.matrices->find(doc.id);
      if (it == res.matrices->end())
        throw Error(ErrorKind::config_error, "no attention matrix for document '" + doc.id + "'");
      return run_attention_method(doc.source, it->second.matrix, *res.lexicon, job.attention, job.policy,
                                  it->second.target_text);
    }
    case MethodKind::nmt_tags:
      return run_nmt_tags_method(doc.source, res.backends->get(job.nmt_backend), job.policy, job.langs);
    case MethodKind::llm_delimiters:
      return run_llm_delimiters_method(doc.source, res.backends->get(job.llm_backend), job.policy, res.llm);
    case MethodKind::hybrid:
      return run_hybrid_method(doc.source, res.backends->get(job.nmt_backend),
                               res.backends->get(job.llm_backend), job.policy, res.llm, job.langs);
  }
  throw Error(ErrorKind::config_error, "unknown method");
}

/// Runs every (document, method) pair, `workers` at a time. Failures are
/// recorded per entry; results come back in document-major order.
inline std::vector<ResultEntry> run_job(const Job &job, const RunResources &res, unsigned workers = 1) {
  std::vector<ResultEntry> results;
  for (const auto &doc : job.documents) {
    for (auto m : job.methods) results.push_back({doc.id, m, std::nullopt, std::nullopt, std::nullopt, 0.0});
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < results.size(); k = next++) {
      auto &r = results[k];
      const auto &doc = job.documents[k / job.methods.size()];
      const auto start = std::chrono::steady_clock::now();
      try {
        r.translation = run_one(doc, r.method, job, res);
      } catch (const Error &e) {
        r.error = e.what();
        r.error_kind = e.kind();
      }
      r.elapsed_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1 || results.size() <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto &t : pool) t.join();
  }
  return results;
}

/// Deterministic result document; timings are kept out of it.
inline nlohmann::json results_to_json(const std::vector<ResultEntry> &results) {
  auto list = nlohmann::json::array();
  for (const auto &r : results) {
    nlohmann::json e;
    if (r.translation) {
      e = translation_to_json(*r.translation);
    } else {
      e = {{"method", to_string(r.method)}};
      e["error"] = *r.error;
      e["error_kind"] = to_string(*r.error_kind);
    }
    e["id"] = r.id;
    list.push_back(std::move(e));
  }
  return nlohmann::json{{"results", list}};
}

/// method -> (id -> translation) from a result document. Failed entries are skipped.
inline std::map<std::string, std::map<std::string, StyledTranslation>> results_from_json(const nlohmann::json &j) {
  std::map<std::string, std::map<std::string, StyledTranslation>> out;
  try {
    for (const auto &e : j.at("results")) {
      if (e.contains("error")) continue;
      auto t = translation_from_json(e);
      const std::string id =
          e.at("id").is_string() ? e.at("id").get<std::string>() : std::to_string(e.at("id").get<long>());
      out[to_string(t.method)].emplace(id, std::move(t));
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::format_error, std::string("result file: ") + e.what());
  }
  return out;
}

}  // namespace stylemt
