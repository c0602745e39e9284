#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "ewstrack/ports.hpp"

namespace ews {

struct HttpBackendConfig {
  std::string api_base;  // e.g. "https://api.example.com/v1"
  std::string api_key;
  std::string model;
  std::chrono::milliseconds timeout{60000};
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  double backoff_factor = 2.0;

  /// LLM_API_BASE, LLM_API_KEY, LLM_MODEL
  static HttpBackendConfig llm_from_env();
  /// EMBED_API_BASE, EMBED_API_KEY, EMBED_MODEL
  static HttpBackendConfig embedder_from_env();
};

/// Chat-completion client: POST {api_base}/chat/completions. Transport
/// failures, 429 and 5xx are retried with exponential backoff up to
/// max_attempts; 401/403 raise AuthError immediately; other statuses raise
/// HttpStatus. Throws InvalidArgument when api_base or api_key is empty.
std::unique_ptr<LlmPort> http_llm(HttpBackendConfig config);

/// Embedding client: POST {api_base}/embeddings. Same retry policy; a reply
/// whose vector length differs from spec.dim or holds non-finite values is a
/// DecodeError.
std::unique_ptr<EmbedderPort> http_embedder(HttpBackendConfig config, EmbeddingSpec spec);

}  // namespace ews
