// Copyright 2025 The MLPrompt Authors
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

#include "mlprompt/llm.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace mlprompt {

namespace {

// Rough byte-per-token estimate used when a backend reports no usage.
long estimate_tokens(std::size_t bytes) { return static_cast<long>(bytes / 4); }

// Removes every ``` fence marker (with optional language tag) while
// keeping the fenced content in place.
std::string strip_fences(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.compare(i, 3, "```") == 0) {
      i += 3;
      while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
      continue;
    }
    out += text[i++];
  }
  return out;
}

}  // namespace

GenerationRequest user_request(std::string prompt, std::string model_name) {
  GenerationRequest request;
  request.messages.push_back({"user", std::move(prompt)});
  request.model_name = std::move(model_name);
  return request;
}

GenerationResult complete(Backend& backend, const GenerationRequest& request) {
  if (request.messages.empty()) {
    throw ConfigError("generation request has no messages");
  }
  if (request.temperature < 0) {
    throw ConfigError("temperature must be >= 0");
  }
  return backend.complete(request);
}

ScriptedBackend& ScriptedBackend::expect(Predicate predicate, std::string response,
                                         std::string note) {
  script_.push_back({std::move(predicate), std::move(response), std::move(note)});
  return *this;
}

ScriptedBackend& ScriptedBackend::expect_contains(std::string needle, std::string response) {
  std::string note = "prompt contains '" + needle + "'";
  Predicate p = [needle = std::move(needle)](const std::string& prompt) {
    return prompt.find(needle) != std::string::npos;
  };
  return expect(std::move(p), std::move(response), std::move(note));
}

ScriptedBackend& ScriptedBackend::expect_any(std::string response) {
  return expect([](const std::string&) { return true; }, std::move(response), "any prompt");
}

GenerationResult ScriptedBackend::complete(const GenerationRequest& request) {
  const std::string& prompt = request.messages.back().text;
  if (cursor_ >= script_.size()) {
    throw ScriptMismatch("scripted backend exhausted: call " + std::to_string(calls_ + 1) +
                         " but script has " + std::to_string(script_.size()) + " entr" +
                         (script_.size() == 1 ? "y" : "ies"));
  }
  const Entry& entry = script_[cursor_];
  ++cursor_;
  ++calls_;
  if (!entry.predicate(prompt)) {
    std::string head = prompt.substr(0, 160);
    throw ScriptMismatch("scripted backend call " + std::to_string(calls_) +
                         " did not match expectation" +
                         (entry.note.empty() ? "" : " (" + entry.note + ")") +
                         "; prompt begins: " + head);
  }
  GenerationResult result;
  result.text = entry.response;
  result.usage.prompt_tokens = estimate_tokens(prompt.size());
  result.usage.completion_tokens = estimate_tokens(entry.response.size());
  result.backend_id = id();
  return result;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw ConfigError("http backend requires a base_url");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (config_.base_url.rfind("https://", 0) == 0) {
    throw ConfigError("this build lacks TLS support; use an http:// base_url");
  }
#endif
}

std::string HttpBackend::id() const { return "http:" + config_.base_url; }

GenerationResult HttpBackend::complete(const GenerationRequest& request) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw BackendError(BackendError::Kind::auth, "credential environment variable '" +
                                                     config_.api_key_env + "' is not set");
  }

  nlohmann::json body_json;
  body_json["model"] = request.model_name;
  body_json["messages"] = nlohmann::json::array();
  for (const Message& m : request.messages) {
    body_json["messages"].push_back({{"role", m.role}, {"content", m.text}});
  }
  body_json["temperature"] = request.temperature;
  body_json["max_tokens"] = request.max_tokens;
  const std::string body = body_json.dump();

  auto log_attempt = [&](int attempt, const std::string& status, const std::string& response,
                         std::chrono::milliseconds latency) {
    if (config_.transcript_path.empty()) return;
    nlohmann::json record;
    record["ts"] = utc_timestamp();
    record["backend"] = id();
    record["attempt"] = attempt;
    record["request"] = body_json;
    record["status"] = status;
    record["response"] = response;
    record["latency_ms"] = latency.count();
    std::lock_guard<std::mutex> lock(transcript_mutex_);
    append_jsonl_line(config_.transcript_path, record.dump());
  };

  const RetryPolicy& retry = config_.retry;
  std::string last_error = "no attempt made";
  BackendError::Kind last_kind = BackendError::Kind::transport;

  for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
    if (attempt > 0) {
      double scaled = static_cast<double>(retry.initial_backoff.count()) *
                      std::pow(retry.multiplier, attempt - 1);
      auto delay = std::chrono::milliseconds(static_cast<long long>(scaled));
      if (delay > retry.max_backoff) delay = retry.max_backoff;
      std::this_thread::sleep_for(delay);
    }

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(request.timeout);
    client.set_read_timeout(request.timeout);
    client.set_write_timeout(request.timeout);
    httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

    auto t0 = std::chrono::steady_clock::now();
    httplib::Result res = client.Post(config_.path, headers, body, "application/json");
    auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - t0);

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      last_kind = res.error() == httplib::Error::ConnectionTimeout ||
                          res.error() == httplib::Error::Read ||
                          res.error() == httplib::Error::Write
                      ? BackendError::Kind::timeout
                      : BackendError::Kind::transport;
      log_attempt(attempt, "transport-error", last_error, latency);
      continue;  // connection-level failures are transient
    }

    log_attempt(attempt, std::to_string(res->status), res->body, latency);

    if (res->status == 200) {
      nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array() ||
          parsed["choices"].empty() || !parsed["choices"][0].contains("message") ||
          !parsed["choices"][0]["message"].contains("content") ||
          !parsed["choices"][0]["message"]["content"].is_string()) {
        throw BackendError(BackendError::Kind::malformed_response,
                           "response is not chat-completion shaped: " + res->body.substr(0, 200));
      }
      GenerationResult result;
      result.text = parsed["choices"][0]["message"]["content"].get<std::string>();
      if (parsed.contains("usage") && parsed["usage"].is_object()) {
        result.usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0L);
        result.usage.completion_tokens = parsed["usage"].value("completion_tokens", 0L);
      } else {
        result.usage.prompt_tokens = estimate_tokens(body.size());
        result.usage.completion_tokens = estimate_tokens(result.text.size());
      }
      result.latency = latency;
      result.backend_id = id();
      return result;
    }
    if (res->status == 401 || res->status == 403) {
      throw BackendError(BackendError::Kind::auth,
                         "authentication rejected (status " + std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      last_kind = res->status == 429 ? BackendError::Kind::rate_limit
                                     : BackendError::Kind::transport;
      continue;  // transient
    }
    throw BackendError(BackendError::Kind::malformed_response,
                       "unexpected status " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 200));
  }
  throw BackendError(last_kind, "retries exhausted; last failure: " + last_error);
}

namespace {

std::string extract_balanced(const std::string& raw, char open, char close,
                             const char* what) {
  const std::string text = strip_fences(raw);
  const std::size_t start = text.find(open);
  if (start == std::string::npos) {
    throw ExtractError(std::string("no JSON ") + what + " found in output");
  }

  std::string out;
  out.reserve(text.size() - start);
  enum class Mode { code, dq_string, sq_string };
  Mode mode = Mode::code;
  int depth = 0;

  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    switch (mode) {
      case Mode::code:
        if (c == open) {
          ++depth;
          out += c;
        } else if (c == close) {
          --depth;
          out += c;
          if (depth == 0) {
            try {
              (void)nlohmann::json::parse(out);
            } catch (const nlohmann::json::exception& e) {
              throw ExtractError(std::string("extracted ") + what + " is not valid JSON: " +
                                 e.what());
            }
            return out;
          }
        } else if (c == '"') {
          mode = Mode::dq_string;
          out += c;
        } else if (c == '\'') {
          mode = Mode::sq_string;
          out += '"';
        } else {
          out += c;
        }
        break;
      case Mode::dq_string:
        if (c == '\\') {
          out += c;
          if (i + 1 < text.size()) out += text[++i];
        } else {
          if (c == '"') mode = Mode::code;
          out += c;
        }
        break;
      case Mode::sq_string:
        // Normalized to a double-quoted string: quote escapes flip.
        if (c == '\\') {
          if (i + 1 < text.size() && text[i + 1] == '\'') {
            out += '\'';
            ++i;
          } else {
            out += c;
            if (i + 1 < text.size()) out += text[++i];
          }
        } else if (c == '\'') {
          mode = Mode::code;
          out += '"';
        } else if (c == '"') {
          out += "\\\"";
        } else {
          out += c;
        }
        break;
    }
  }
  throw ExtractError(std::string("JSON ") + what + " is not balanced; output looks truncated");
}

}  // namespace

std::string extract_json(const std::string& raw) {
  return extract_balanced(raw, '{', '}', "object");
}

std::string extract_json_array(const std::string& raw) {
  return extract_balanced(raw, '[', ']', "array");
}

void append_jsonl_line(const std::string& path, const std::string& line) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw ConfigError("cannot open transcript file '" + path + "'");
  out << line << "\n";
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace mlprompt
