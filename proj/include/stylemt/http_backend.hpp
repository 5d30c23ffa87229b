#pragma once

// Live HTTP backends for hosted NMT and chat-completion services.
//
// Request templates:
//   ms-translator-v3   POST {endpoint}/translate?api-version=3.0&from=..&to=..[&textType=html]
//                      header Ocp-Apim-Subscription-Key, body [{"Text": ...}]
//   azure-openai-chat  POST {endpoint}, header api-key, chat-completions body
//   openai-chat        POST {endpoint}, header Authorization: Bearer, same body

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include <chrono>
#include <cstdlib>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>

#include "json.hpp"
#include "stylemt/backends.hpp"
#include "stylemt/error.hpp"

namespace stylemt {

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/', may carry a query
};

inline SplitUrl split_url(const std::string &url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorKind::config_error, "endpoint '" + url + "' has no scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// Holds one slot of a backend's in-flight budget.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<> &sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard &) = delete;
  SlotGuard &operator=(const SlotGuard &) = delete;

 private:
  std::counting_semaphore<> &sem_;
};

}  // namespace detail

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig config)
      : Backend(config.name),
        config_(std::move(config)),
        url_(detail::split_url(config_.endpoint)),
        slots_(std::make_unique<std::counting_semaphore<>>(config_.max_in_flight)) {
    const auto &t = config_.request_template;
    if (config_.kind == BackendKind::nmt && t != "ms-translator-v3")
      throw Error(ErrorKind::config_error, "nmt backend '" + name() + "': unknown template '" + t + "'");
    if (config_.kind == BackendKind::llm && t != "azure-openai-chat" && t != "openai-chat")
      throw Error(ErrorKind::config_error, "llm backend '" + name() + "': unknown template '" + t + "'");
  }

  std::string translate(const TranslationRequest &req) const override {
    if (config_.kind != BackendKind::nmt) return Backend::translate(req);
    validate(req);
    std::string path = url_.path;
    if (path.back() != '/') path += '/';
    path += "translate?api-version=3.0&from=" + req.source_lang + "&to=" + req.target_lang;
    if (req.preserve_markup) path += "&textType=html";
    const nlohmann::json body = nlohmann::json::array({{{"Text", req.body}}});
    httplib::Headers headers;
    if (auto key = credential()) headers.emplace("Ocp-Apim-Subscription-Key", *key);

    const auto reply = post(path, headers, body.dump());
    try {
      return reply.at(0).at("translations").at(0).at("text").get<std::string>();
    } catch (const nlohmann::json::exception &) {
      throw Error(ErrorKind::remote_error, "backend '" + name() + "': unexpected response shape");
    }
  }

  std::string complete(const CompletionRequest &req) const override {
    if (config_.kind != BackendKind::llm) return Backend::complete(req);
    validate(req);
    const nlohmann::json body = {
        {"messages",
         {{{"role", "system"}, {"content", req.system_prompt}},
          {{"role", "user"}, {"content", req.user_prompt}}}},
        {"max_tokens", req.max_output_tokens}};
    httplib::Headers headers;
    if (auto key = credential()) {
      if (config_.request_template == "azure-openai-chat")
        headers.emplace("api-key", *key);
      else
        headers.emplace("Authorization", "Bearer " + *key);
    }
    const auto reply = post(url_.path, headers, body.dump());
    std::string text;
    try {
      const auto &content = reply.at("choices").at(0).at("message").at("content");
      text = content.is_null() ? std::string() : content.get<std::string>();
    } catch (const nlohmann::json::exception &) {
      throw Error(ErrorKind::remote_error, "backend '" + name() + "': unexpected response shape");
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
      throw Error(ErrorKind::empty_completion, "backend '" + name() + "' returned an empty completion");
    return text;
  }

 private:
  std::optional<std::string> credential() const {
    if (config_.auth_env.empty()) return std::nullopt;
    const char *value = std::getenv(config_.auth_env.c_str());
    if (value == nullptr || *value == '\0')
      throw Error(ErrorKind::auth_error, "backend '" + name() + "': environment variable " +
                                             config_.auth_env + " is not set");
    return std::string(value);
  }

  nlohmann::json post(const std::string &path, const httplib::Headers &headers,
                      const std::string &body) const {
    detail::SlotGuard slot(*slots_);
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms) * (1 << (attempt - 1)));
      }
      httplib::Client client(url_.origin);
      const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      const auto res = client.Post(path, headers, body, "application/json");
      if (!res) {
        last_error = "transport failure (" + httplib::to_string(res.error()) + ")";
        continue;
      }
      if (res->status == 401 || res->status == 403)
        throw Error(ErrorKind::auth_error,
                    "backend '" + name() + "': HTTP " + std::to_string(res->status));
      if (res->status < 200 || res->status >= 300) {
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        if (attempt == config_.retries)
          throw Error(ErrorKind::remote_error, "backend '" + name() + "': " + last_error);
        continue;
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception &) {
        throw Error(ErrorKind::remote_error, "backend '" + name() + "': response is not JSON");
      }
    }
    throw Error(ErrorKind::transport_error,
                "backend '" + name() + "': " + last_error + " after " +
                    std::to_string(config_.retries + 1) + " attempt(s)");
  }

  BackendConfig config_;
  detail::SplitUrl url_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

/// Any backend kind, live or mock.
inline std::unique_ptr<Backend> make_backend(const BackendConfig &config) {
  if (config.kind == BackendKind::nmt || config.kind == BackendKind::llm)
    return std::make_unique<HttpBackend>(config);
  return make_mock_backend(config);
}

}  // namespace stylemt
