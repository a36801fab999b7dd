#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "wahlmeter/error.hpp"
#include "wahlmeter/gateway.hpp"

namespace wahlmeter {

/// OpenAI-compatible chat-completions client. POSTs
/// {base_url}/chat/completions with one system and one user message and reads
/// choices[0].message.content. Transport and protocol failures are retried up
/// to the configured limit before EndpointError is raised.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(std::string base_url, std::string api_key, BackendSettings settings = {})
      : api_key_(std::move(api_key)), settings_(settings) {
    const size_t scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
      fail(Errc::endpoint_error, "base URL must include a scheme: " + base_url);
    }
    const size_t path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      host_ = base_url;
    } else {
      host_ = base_url.substr(0, path_start);
      path_prefix_ = base_url.substr(path_start);
    }
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }

  CompletionResult complete(const std::string& model_id, int /*statement_id*/,
                            const PromptPair& prompt) override {
    nlohmann::json body{
        {"model", model_id},
        {"messages",
         {{{"role", "system"}, {"content", prompt.system}},
          {{"role", "user"}, {"content", prompt.human}}}},
        {"temperature", settings_.temperature},
    };
    if (settings_.seed) body["seed"] = *settings_.seed;
    const std::string payload = body.dump();

    std::string last_failure = "no attempt made";
    const int retries = settings_.retry_limit < 1 ? 1 : settings_.retry_limit;
    for (int attempt = 1; attempt <= retries; ++attempt) {
      if (attempt > 1) std::this_thread::sleep_for(retry_backoff_);
      httplib::Client client(host_);
      client.set_connection_timeout(std::chrono::seconds(10));
      client.set_read_timeout(std::chrono::seconds(300));
      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
      auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
      if (!res) {
        last_failure = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_failure = "HTTP " + std::to_string(res->status);
        continue;
      }
      try {
        const auto doc = nlohmann::json::parse(res->body);
        return CompletionResult{
            doc.at("choices").at(0).at("message").at("content").get<std::string>(), std::nullopt};
      } catch (const nlohmann::json::exception& e) {
        last_failure = std::string("malformed response body: ") + e.what();
      }
    }
    fail(Errc::endpoint_error,
         host_ + path_prefix_ + "/chat/completions for " + model_id + " failed after " +
             std::to_string(retries) + " attempts (" + last_failure + ")");
  }

  void set_retry_backoff(std::chrono::milliseconds backoff) { retry_backoff_ = backoff; }

 private:
  std::string host_;
  std::string path_prefix_;
  std::string api_key_;
  BackendSettings settings_;
  std::chrono::milliseconds retry_backoff_{250};
};

/// Name of the environment variable holding the API key.
inline constexpr const char* kApiKeyEnvVar = "WAHLMETER_API_KEY";

inline std::string api_key_from_env() {
  const char* value = std::getenv(kApiKeyEnvVar);
  return value == nullptr ? std::string() : std::string(value);
}

}  // namespace wahlmeter
