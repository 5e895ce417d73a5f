#pragma once

// Chat-completion provider over HTTP(S). Enable HTTPS endpoints by defining
// CPPHTTPLIB_OPENSSL_SUPPORT and linking OpenSSL.

#include <chrono>
#include <cstdlib>
#include <memory>
#include <regex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "coevo/error.hpp"
#include "coevo/llm.hpp"

namespace coevo {

class HttpProvider : public CompletionProvider {
 public:
  explicit HttpProvider(ProviderConfig config) : config_(std::move(config)) {
    config_.check();
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint_url, m, url))
      throw PreconditionViolated("malformed endpoint URL '" + config_.endpoint_url + "'");
    origin_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : "/";
  }

  std::string complete(const std::string& prompt) override {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw PreconditionViolated("environment variable " + config_.api_key_env + " is not set");

    nlohmann::json body{{"model", config_.model_name},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                        {"temperature", config_.temperature}};

    httplib::Client client(origin_);
    auto secs = std::chrono::duration<double>(config_.timeout_seconds);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(secs);
    client.set_connection_timeout(usecs);
    client.set_read_timeout(usecs);
    client.set_write_timeout(usecs);
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      auto elapsed = std::chrono::steady_clock::now() - started;
      if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= secs * 0.95))
        throw Timeout("request to " + config_.endpoint_url + " timed out");
      throw ProviderError("request to " + config_.endpoint_url + " failed: " + httplib::to_string(err));
    }
    if (res->status != 200)
      throw ProviderError(std::to_string(res->status) + " " + res->body.substr(0, 200));
    try {
      auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(std::string("unexpected response body: ") + e.what());
    }
  }

 private:
  ProviderConfig config_;
  std::string origin_;
  std::string path_;
};

inline std::unique_ptr<CompletionProvider> make_provider(const ProviderConfig& config) {
  config.check();
  if (config.kind == ProviderConfig::Kind::Mock)
    return MockProvider::from_directory(config.script_path);
  return std::make_unique<HttpProvider>(config);
}

}  // namespace coevo
