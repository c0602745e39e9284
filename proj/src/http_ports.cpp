#include "ewstrack/http_ports.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ewstrack/errors.hpp"

namespace ews {

using nlohmann::json;

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_base(const std::string& base) {
  const auto scheme_end = base.find("://");
  const auto path_start = base.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  Endpoint ep;
  if (path_start == std::string::npos) {
    ep.origin = base;
  } else {
    ep.origin = base.substr(0, path_start);
    ep.prefix = base.substr(path_start);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  }
  return ep;
}

/// POSTs a JSON body with bounded retries and returns the parsed response.
class JsonPoster {
 public:
  explicit JsonPoster(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.api_base.empty()) throw Error(ErrorCode::InvalidArgument, "backend api_base is empty");
    if (config_.api_key.empty()) throw Error(ErrorCode::InvalidArgument, "backend api_key is empty");
    if (config_.max_attempts < 1) config_.max_attempts = 1;
    endpoint_ = split_base(config_.api_base);
  }

  const HttpBackendConfig& config() const { return config_; }

  json post(const std::string& path, const json& body) const {
    auto delay = config_.backoff_base;
    for (int attempt = 1;; ++attempt) {
      try {
        return post_once(path, body);
      } catch (const HttpError& e) {
        const bool retryable = e.code() == ErrorCode::Timeout ||
                               (e.code() == ErrorCode::HttpStatus && (e.status() == 0 || e.status() == 429 || e.status() >= 500));
        if (!retryable || attempt >= config_.max_attempts) throw;
      }
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(delay.count() * config_.backoff_factor));
    }
  }

 private:
  json post_once(const std::string& path, const json& body) const {
    // httplib clients are not shareable across threads; one per request.
    httplib::Client client(endpoint_.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};

    auto res = client.Post(endpoint_.prefix + path, headers, body.dump(), "application/json");
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
        throw HttpError(ErrorCode::Timeout, 0, "request to " + path + " timed out");
      }
      throw HttpError(ErrorCode::HttpStatus, 0, "transport failure: " + httplib::to_string(err));
    }
    if (res->status == 401 || res->status == 403) {
      throw HttpError(ErrorCode::AuthError, res->status, "backend rejected credentials");
    }
    if (res->status < 200 || res->status >= 300) {
      throw HttpError(ErrorCode::HttpStatus, res->status, "HTTP " + std::to_string(res->status));
    }
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::DecodeError, std::string("response body is not JSON: ") + e.what());
    }
  }

  HttpBackendConfig config_;
  Endpoint endpoint_;
};

class HttpLlm final : public LlmPort {
 public:
  explicit HttpLlm(HttpBackendConfig config) : poster_(std::move(config)) {}

 protected:
  std::string send(std::string_view, std::string_view prompt, Decode decode) override {
    json body = {{"model", poster_.config().model},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    if (decode == Decode::json) body["response_format"] = {{"type", "json_object"}};
    const json res = poster_.post("/chat/completions", body);
    try {
      const auto& content = res.at("choices").at(0).at("message").at("content");
      if (!content.is_string()) throw Error(ErrorCode::DecodeError, "message content is not a string");
      return content.get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::DecodeError, std::string("unexpected completion shape: ") + e.what());
    }
  }

 private:
  JsonPoster poster_;
};

class HttpEmbedder final : public EmbedderPort {
 public:
  HttpEmbedder(HttpBackendConfig config, EmbeddingSpec spec) : poster_(std::move(config)), spec_(spec) {}

  const EmbeddingSpec& spec() const override { return spec_; }

  Vector embed(const EmbedPayload& payload) const override {
    json body = {{"model", poster_.config().model}, {"input", payload.text}};
    if (payload.image_ref) body["image"] = *payload.image_ref;
    const json res = poster_.post("/embeddings", body);
    Vector v;
    try {
      for (const auto& x : res.at("data").at(0).at("embedding")) v.push_back(x.get<float>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::DecodeError, std::string("unexpected embedding shape: ") + e.what());
    }
    if (v.size() != spec_.dim) {
      throw Error(ErrorCode::DecodeError,
                  "embedding has " + std::to_string(v.size()) + " dims, expected " + std::to_string(spec_.dim));
    }
    for (float x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::DecodeError, "embedding holds a non-finite value");
    }
    return v;
  }
  using EmbedderPort::embed;

 private:
  JsonPoster poster_;
  EmbeddingSpec spec_;
};

}  // namespace

HttpBackendConfig HttpBackendConfig::llm_from_env() {
  HttpBackendConfig c;
  c.api_base = env_or_empty("LLM_API_BASE");
  c.api_key = env_or_empty("LLM_API_KEY");
  c.model = env_or_empty("LLM_MODEL");
  return c;
}

HttpBackendConfig HttpBackendConfig::embedder_from_env() {
  HttpBackendConfig c;
  c.api_base = env_or_empty("EMBED_API_BASE");
  c.api_key = env_or_empty("EMBED_API_KEY");
  c.model = env_or_empty("EMBED_MODEL");
  return c;
}

std::unique_ptr<LlmPort> http_llm(HttpBackendConfig config) { return std::make_unique<HttpLlm>(std::move(config)); }

std::unique_ptr<EmbedderPort> http_embedder(HttpBackendConfig config, EmbeddingSpec spec) {
  return std::make_unique<HttpEmbedder>(std::move(config), spec);
}

}  // namespace ews
