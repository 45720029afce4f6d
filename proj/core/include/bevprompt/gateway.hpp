// Copyright 2026 The bevprompt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bevprompt/bundle.hpp"

namespace bevprompt {

inline constexpr unsigned kMaxRetriesLimit = 8;

struct GatewayConfig {
  std::string endpoint;
  std::string model;
  /// Request shape: "openai" (chat completions) or "anthropic" (messages).
  std::string provider = "openai";
  /// Name of the environment variable holding the key; keys never come from files or flags.
  std::string api_key_env = "BEVPROMPT_API_KEY";
  unsigned max_retries = 4;
  double timeout_s = 120.0;
  double temperature = 0.0;
  unsigned max_output_tokens = 1024;
  double backoff_base_s = 1.0;
  double backoff_jitter = 0.2;
  std::uint64_t jitter_seed = 0;
};

void validate_config(const GatewayConfig& config);
GatewayConfig gateway_config_from_json(const nlohmann::json& doc);
nlohmann::json gateway_config_to_json(const GatewayConfig& config);

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  double timeout_s = 120.0;
};

/// status == 0 means the request never produced an HTTP response.
struct HttpResponse {
  int status = 0;
  std::string body;
  std::string transport_error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport (http and https).
std::unique_ptr<HttpTransport> make_http_transport();

struct TokenUsage {
  std::uint64_t prompt = 0;
  std::uint64_t completion = 0;

  bool operator==(const TokenUsage&) const = default;
};

struct ModelResponse {
  std::string qa_id;
  /// Present iff the final attempt succeeded.
  std::optional<std::string> raw_text;
  double latency_s = 0.0;
  unsigned attempt_count = 0;
  std::optional<TokenUsage> token_usage;
  std::optional<std::string> error;

  bool ok() const { return raw_text.has_value(); }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Injection points for the network, the clock and the environment.
struct GatewayRuntime {
  HttpTransport* transport = nullptr;
  Sleeper sleep;
  EnvLookup getenv;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

/// JSON body for the configured provider. Images become inline base64 parts
/// in bundle order, followed by the guide, metadata, question and answer
/// instruction as text parts.
nlohmann::json build_request_body(const PromptBundle& bundle, const GatewayConfig& config,
                                  const std::filesystem::path& artifact_root);
HttpRequest build_request(const PromptBundle& bundle, const GatewayConfig& config,
                          const std::filesystem::path& artifact_root, const std::string& api_key);

/// Extracts text and usage from a provider response body; throws MalformedResponse.
std::pair<std::string, std::optional<TokenUsage>> parse_response_body(const std::string& body,
                                                                      const GatewayConfig& config);

/// Delay before retry number `retry` (1-based): base * 2^(retry-1) scaled by
/// a jitter factor in [1 - j, 1 + j].
std::chrono::milliseconds backoff_delay(unsigned retry, const GatewayConfig& config, std::uint64_t jitter_key);

/// One request with retries on transport failures, 429 and 5xx.
/// Throws AuthError (401/403), TransportError or MalformedResponse.
ModelResponse send_bundle(const PromptBundle& bundle, const GatewayConfig& config,
                          const std::filesystem::path& artifact_root, const GatewayRuntime& runtime);

struct BatchOptions {
  unsigned concurrency = 1;
  /// Line-delimited JSON; appended as responses complete and read back on resume.
  std::filesystem::path log_path;
};

struct BatchResult {
  std::vector<ModelResponse> responses;
  std::size_t skipped = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  TokenUsage total_usage;
};

/// Dispatches bundles with at most `concurrency` requests in flight. Items
/// with a successful entry in the log are not re-sent. Output order matches
/// input order; failures are recorded, never thrown.
BatchResult run_batch(const std::vector<PromptBundle>& bundles, const GatewayConfig& config,
                      const std::filesystem::path& artifact_root, const BatchOptions& options,
                      const GatewayRuntime& runtime);

nlohmann::json response_to_json(const ModelResponse& response);
ModelResponse response_from_json(const nlohmann::json& doc);
/// Later lines win for duplicate qa_ids; truncated trailing lines are ignored.
std::vector<ModelResponse> read_response_log(const std::filesystem::path& path);

}  // namespace bevprompt
