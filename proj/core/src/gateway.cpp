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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include <openssl/evp.h>

#include "bevprompt/errors.hpp"
#include "bevprompt/gateway.hpp"
#include "bevprompt/qa.hpp"

namespace bevprompt {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string_view media_type(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return "image/jpeg";
  return "image/png";
}

std::vector<std::string> text_parts(const PromptBundle& bundle) {
  std::vector<std::string> parts;
  if (bundle.guide_text && !bundle.guide_text->empty()) parts.push_back(*bundle.guide_text);
  if (!bundle.metadata_text.empty()) parts.push_back("Object metadata:\n" + bundle.metadata_text);
  parts.push_back(bundle.question_text);
  if (!bundle.answer_instruction.empty()) parts.push_back(bundle.answer_instruction);
  return parts;
}

bool retryable(const HttpResponse& response) {
  return response.status == 0 || response.status == 429 || response.status >= 500;
}

std::string describe(const HttpResponse& response) {
  if (response.status == 0) return "transport failure: " + response.transport_error;
  std::string snippet = response.body.substr(0, 200);
  return "HTTP " + std::to_string(response.status) + (snippet.empty() ? "" : ": " + snippet);
}

std::optional<std::string> default_getenv(const std::string& name) {
  if (const char* value = std::getenv(name.c_str()); value != nullptr && *value != '\0') return std::string(value);
  return std::nullopt;
}

// Runs the retry loop, keeping `out` current so callers can report attempts on failure.
void dispatch(const PromptBundle& bundle, const GatewayConfig& config, const std::filesystem::path& root,
              const GatewayRuntime& runtime, HttpTransport& transport, ModelResponse& out) {
  const EnvLookup getenv = runtime.getenv ? runtime.getenv : EnvLookup(default_getenv);
  const Sleeper sleep = runtime.sleep ? runtime.sleep : Sleeper([](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  });
  const std::string key = getenv(config.api_key_env).value_or("");
  const HttpRequest request = build_request(bundle, config, root, key);
  const std::uint64_t jitter_key = splitmix64(fnv1a(bundle.qa_id) ^ splitmix64(config.jitter_seed));
  const auto started = std::chrono::steady_clock::now();

  for (unsigned attempt = 1;; ++attempt) {
    out.attempt_count = attempt;
    const HttpResponse response = transport.post(request);
    out.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (response.status >= 200 && response.status < 300) {
      auto [text, usage] = parse_response_body(response.body, config);
      out.raw_text = std::move(text);
      out.token_usage = usage;
      return;
    }
    if (response.status == 401 || response.status == 403) {
      throw Error(ErrorKind::kAuth, bundle.qa_id + ": " + describe(response));
    }
    if (!retryable(response)) throw Error(ErrorKind::kTransport, bundle.qa_id + ": " + describe(response));
    if (attempt > config.max_retries) {
      throw Error(ErrorKind::kTransport,
                  bundle.qa_id + ": giving up after " + std::to_string(attempt) + " attempts, last " + describe(response));
    }
    sleep(backoff_delay(attempt, config, jitter_key));
  }
}

}  // namespace

void validate_config(const GatewayConfig& config) {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::kValidation, "gateway config: " + what); };
  if (config.endpoint.empty()) bad("endpoint must be set");
  if (config.model.empty()) bad("model must be set");
  if (config.provider != "openai" && config.provider != "anthropic") bad("provider must be 'openai' or 'anthropic'");
  if (config.api_key_env.empty()) bad("api_key_env must name an environment variable");
  if (config.max_retries > kMaxRetriesLimit) bad("max_retries must be <= 8");
  if (!(config.timeout_s > 0.0)) bad("timeout_s must be > 0");
  if (!(config.temperature >= 0.0)) bad("temperature must be >= 0");
  if (config.max_output_tokens == 0) bad("max_output_tokens must be > 0");
  if (!(config.backoff_base_s >= 0.0)) bad("backoff_base_s must be >= 0");
  if (!(config.backoff_jitter >= 0.0 && config.backoff_jitter < 1.0)) bad("backoff_jitter must be in [0, 1)");
}

GatewayConfig gateway_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "gateway config must be a JSON object");
  static const std::set<std::string> known = {"endpoint",    "model",       "provider",          "api_key_env",
                                              "max_retries", "timeout_s",   "temperature",       "max_output_tokens",
                                              "backoff_base_s", "backoff_jitter", "jitter_seed"};
  for (const auto& [key, value] : doc.items()) {
    if (key == "api_key") {
      throw Error(ErrorKind::kValidation, "gateway config: api keys are read from the environment only (use api_key_env)");
    }
    if (known.count(key) == 0) throw Error(ErrorKind::kValidation, "gateway config: unknown key '" + key + "'");
  }
  try {
    GatewayConfig c;
    c.endpoint = doc.value("endpoint", c.endpoint);
    c.model = doc.value("model", c.model);
    c.provider = doc.value("provider", c.provider);
    c.api_key_env = doc.value("api_key_env", c.api_key_env);
    c.max_retries = doc.value("max_retries", c.max_retries);
    c.timeout_s = doc.value("timeout_s", c.timeout_s);
    c.temperature = doc.value("temperature", c.temperature);
    c.max_output_tokens = doc.value("max_output_tokens", c.max_output_tokens);
    c.backoff_base_s = doc.value("backoff_base_s", c.backoff_base_s);
    c.backoff_jitter = doc.value("backoff_jitter", c.backoff_jitter);
    c.jitter_seed = doc.value("jitter_seed", c.jitter_seed);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("gateway config: ") + e.what());
  }
}

nlohmann::json gateway_config_to_json(const GatewayConfig& c) {
  return {{"endpoint", c.endpoint},
          {"model", c.model},
          {"provider", c.provider},
          {"api_key_env", c.api_key_env},
          {"max_retries", c.max_retries},
          {"timeout_s", c.timeout_s},
          {"temperature", c.temperature},
          {"max_output_tokens", c.max_output_tokens},
          {"backoff_base_s", c.backoff_base_s},
          {"backoff_jitter", c.backoff_jitter},
          {"jitter_seed", c.jitter_seed}};
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.empty()) return {};
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

nlohmann::json build_request_body(const PromptBundle& bundle, const GatewayConfig& config,
                                  const std::filesystem::path& artifact_root) {
  const bool anthropic = config.provider == "anthropic";
  nlohmann::json content = nlohmann::json::array();
  for (const auto& image : bundle.images) {
    const auto bytes = read_bytes(artifact_root / image.path);
    const std::string data = base64_encode(bytes);
    const std::string type(media_type(bytes));
    if (anthropic) {
      content.push_back({{"type", "image"}, {"source", {{"type", "base64"}, {"media_type", type}, {"data", data}}}});
    } else {
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:" + type + ";base64," + data}}}});
    }
  }
  for (const auto& text : text_parts(bundle)) content.push_back({{"type", "text"}, {"text", text}});

  nlohmann::json body = {{"model", config.model},
                         {"temperature", config.temperature},
                         {"max_tokens", config.max_output_tokens},
                         {"messages", {{{"role", "user"}, {"content", content}}}}};
  return body;
}

HttpRequest build_request(const PromptBundle& bundle, const GatewayConfig& config,
                          const std::filesystem::path& artifact_root, const std::string& api_key) {
  HttpRequest request;
  request.url = config.endpoint;
  request.timeout_s = config.timeout_s;
  request.headers.emplace_back("Content-Type", "application/json");
  if (config.provider == "anthropic") {
    request.headers.emplace_back("anthropic-version", "2023-06-01");
    if (!api_key.empty()) request.headers.emplace_back("x-api-key", api_key);
  } else if (!api_key.empty()) {
    request.headers.emplace_back("Authorization", "Bearer " + api_key);
  }
  request.body = build_request_body(bundle, config, artifact_root).dump();
  return request;
}

std::pair<std::string, std::optional<TokenUsage>> parse_response_body(const std::string& body,
                                                                      const GatewayConfig& config) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kMalformedResponse, std::string("response is not JSON: ") + e.what());
  }
  try {
    std::string text;
    std::optional<TokenUsage> usage;
    auto collect = [&text](const nlohmann::json& parts) {
      for (const auto& part : parts) {
        if (part.is_string()) {
          text += part.get<std::string>();
        } else if (part.value("type", std::string()) == "text") {
          text += part.at("text").get<std::string>();
        }
      }
    };
    if (config.provider == "anthropic") {
      collect(doc.at("content"));
      if (auto u = doc.find("usage"); u != doc.end() && u->is_object()) {
        usage = TokenUsage{u->value("input_tokens", std::uint64_t{0}), u->value("output_tokens", std::uint64_t{0})};
      }
    } else {
      const auto& content = doc.at("choices").at(0).at("message").at("content");
      if (content.is_string()) {
        text = content.get<std::string>();
      } else {
        collect(content);
      }
      if (auto u = doc.find("usage"); u != doc.end() && u->is_object()) {
        usage = TokenUsage{u->value("prompt_tokens", std::uint64_t{0}), u->value("completion_tokens", std::uint64_t{0})};
      }
    }
    return {std::move(text), usage};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedResponse, std::string("unexpected response shape: ") + e.what());
  }
}

std::chrono::milliseconds backoff_delay(unsigned retry, const GatewayConfig& config, std::uint64_t jitter_key) {
  const unsigned exponent = retry == 0 ? 0 : retry - 1;
  const double u = static_cast<double>(splitmix64(jitter_key + retry) >> 11) * 0x1.0p-53;
  const double factor = 1.0 + config.backoff_jitter * (2.0 * u - 1.0);
  const double seconds = config.backoff_base_s * std::ldexp(1.0, static_cast<int>(exponent)) * factor;
  return std::chrono::milliseconds(static_cast<long long>(std::llround(seconds * 1000.0)));
}

ModelResponse send_bundle(const PromptBundle& bundle, const GatewayConfig& config,
                          const std::filesystem::path& artifact_root, const GatewayRuntime& runtime) {
  validate_config(config);
  std::unique_ptr<HttpTransport> owned;
  HttpTransport* transport = runtime.transport;
  if (transport == nullptr) {
    owned = make_http_transport();
    transport = owned.get();
  }
  ModelResponse out;
  out.qa_id = bundle.qa_id;
  dispatch(bundle, config, artifact_root, runtime, *transport, out);
  return out;
}

nlohmann::json response_to_json(const ModelResponse& r) {
  return {{"qa_id", r.qa_id},
          {"raw_text", r.raw_text ? nlohmann::json(*r.raw_text) : nlohmann::json(nullptr)},
          {"latency_s", r.latency_s},
          {"attempt_count", r.attempt_count},
          {"token_usage", r.token_usage ? nlohmann::json{{"prompt", r.token_usage->prompt},
                                                         {"completion", r.token_usage->completion}}
                                        : nlohmann::json(nullptr)},
          {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr)}};
}

ModelResponse response_from_json(const nlohmann::json& doc) {
  try {
    ModelResponse r;
    r.qa_id = doc.at("qa_id").get<std::string>();
    if (auto it = doc.find("raw_text"); it != doc.end() && !it->is_null()) r.raw_text = it->get<std::string>();
    r.latency_s = doc.value("latency_s", 0.0);
    r.attempt_count = doc.value("attempt_count", 0u);
    if (auto it = doc.find("token_usage"); it != doc.end() && !it->is_null()) {
      r.token_usage = TokenUsage{it->at("prompt").get<std::uint64_t>(), it->at("completion").get<std::uint64_t>()};
    }
    if (auto it = doc.find("error"); it != doc.end() && !it->is_null()) r.error = it->get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("response record: ") + e.what());
  }
}

std::vector<ModelResponse> read_response_log(const std::filesystem::path& path) {
  std::vector<ModelResponse> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::unordered_map<std::string, std::size_t> position;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ModelResponse r;
    try {
      r = response_from_json(nlohmann::json::parse(line));
    } catch (const std::exception&) {
      continue;  // a crash can leave a partial last line
    }
    if (auto it = position.find(r.qa_id); it != position.end()) {
      out[it->second] = std::move(r);
    } else {
      position.emplace(r.qa_id, out.size());
      out.push_back(std::move(r));
    }
  }
  return out;
}

BatchResult run_batch(const std::vector<PromptBundle>& bundles, const GatewayConfig& config,
                      const std::filesystem::path& artifact_root, const BatchOptions& options,
                      const GatewayRuntime& runtime) {
  validate_config(config);
  if (options.concurrency == 0) throw Error(ErrorKind::kValidation, "concurrency must be >= 1");

  BatchResult result;
  result.responses.resize(bundles.size());
  std::unordered_map<std::string, ModelResponse> done;
  if (!options.log_path.empty()) {
    for (auto& r : read_response_log(options.log_path)) {
      if (r.ok()) done[r.qa_id] = std::move(r);
    }
  }
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (auto it = done.find(bundles[i].qa_id); it != done.end()) {
      result.responses[i] = it->second;
      ++result.skipped;
    } else {
      pending.push_back(i);
    }
  }

  std::unique_ptr<HttpTransport> owned;
  HttpTransport* transport = runtime.transport;
  if (transport == nullptr && !pending.empty()) {
    owned = make_http_transport();
    transport = owned.get();
  }

  std::ofstream log;
  if (!options.log_path.empty()) {
    if (options.log_path.has_parent_path()) std::filesystem::create_directories(options.log_path.parent_path());
    bool torn_tail = false;
    if (std::ifstream existing(options.log_path, std::ios::binary | std::ios::ate); existing && existing.tellg() > 0) {
      existing.seekg(-1, std::ios::end);
      torn_tail = existing.get() != '\n';
    }
    log.open(options.log_path, std::ios::binary | std::ios::app);
    if (!log) throw Error(ErrorKind::kIo, "cannot open response log " + options.log_path.string());
    // Terminate a torn record so the next append starts on its own line.
    if (torn_tail) log << '\n';
  }
  std::mutex sink;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < pending.size(); k = next.fetch_add(1)) {
      const std::size_t i = pending[k];
      ModelResponse r;
      r.qa_id = bundles[i].qa_id;
      try {
        dispatch(bundles[i], config, artifact_root, runtime, *transport, r);
      } catch (const std::exception& e) {
        r.raw_text.reset();
        r.token_usage.reset();
        r.error = e.what();
      }
      std::lock_guard lock(sink);
      if (log.is_open()) {
        log << response_to_json(r).dump() << '\n';
        log.flush();
      }
      result.responses[i] = std::move(r);
    }
  };
  const std::size_t threads = std::min<std::size_t>(options.concurrency, pending.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  if (threads > 0) worker();
  pool.clear();

  for (std::size_t k : pending) {
    if (result.responses[k].ok()) {
      ++result.succeeded;
    } else {
      ++result.failed;
    }
  }
  for (const auto& r : result.responses) {
    if (r.token_usage) {
      result.total_usage.prompt += r.token_usage->prompt;
      result.total_usage.completion += r.token_usage->completion;
    }
  }
  return result;
}

}  // namespace bevprompt
