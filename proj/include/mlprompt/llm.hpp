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

#ifndef MLPROMPT_LLM_HPP
#define MLPROMPT_LLM_HPP

#include <chrono>
#include <cstddef>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "mlprompt/errors.hpp"

namespace mlprompt {

struct Message {
  std::string role;
  std::string text;
};

struct GenerationRequest {
  std::vector<Message> messages;
  std::string model_name = "gpt-4";
  double temperature = 0.7;
  int max_tokens = 2048;
  std::chrono::milliseconds timeout{60000};
};

/// A request with one user message, the common case.
GenerationRequest user_request(std::string prompt, std::string model_name = "gpt-4");

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct GenerationResult {
  /// Model output, byte-exact as received.
  std::string text;
  TokenUsage usage;
  std::chrono::milliseconds latency{0};
  std::string backend_id;
};

class BackendError : public Error {
 public:
  enum class Kind { auth, timeout, rate_limit, malformed_response, transport };
  BackendError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// A scripted expectation was not met: wrong prompt, or more calls than
/// script entries. Always a bug in the scenario under test, never
/// swallowed.
class ScriptMismatch : public Error {
 public:
  using Error::Error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenerationResult complete(const GenerationRequest& request) = 0;
  virtual std::string id() const = 0;
  /// Backends that are not safe for concurrent complete() calls say so;
  /// the harness serializes them.
  virtual bool single_flight() const { return true; }
};

/// Validates request invariants (at least one message, temperature >= 0)
/// and dispatches to the backend.
GenerationResult complete(Backend& backend, const GenerationRequest& request);

/// Deterministic backend for tests: an ordered script of expectations.
/// Each call consumes exactly one entry; the entry's predicate runs
/// against the request's last message text.
class ScriptedBackend : public Backend {
 public:
  using Predicate = std::function<bool(const std::string& prompt)>;

  /// Appends an expectation. note names the entry in mismatch messages.
  ScriptedBackend& expect(Predicate predicate, std::string response, std::string note = "");
  /// Expectation that the prompt contains needle.
  ScriptedBackend& expect_contains(std::string needle, std::string response);
  /// Expectation that matches any prompt.
  ScriptedBackend& expect_any(std::string response);

  GenerationResult complete(const GenerationRequest& request) override;
  std::string id() const override { return "scripted"; }

  std::size_t calls() const { return calls_; }
  std::size_t remaining() const { return script_.size() - cursor_; }

 private:
  struct Entry {
    Predicate predicate;
    std::string response;
    std::string note;
  };
  std::vector<Entry> script_;
  std::size_t cursor_ = 0;
  std::size_t calls_ = 0;
};

struct RetryPolicy {
  /// Additional attempts after the first, spent only on transient
  /// failures (rate limits, 5xx, timeouts, connection errors).
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{4000};
};

struct HttpBackendConfig {
  /// Any chat-completions compatible server, e.g. "https://api.openai.com"
  /// or "http://localhost:8000" for a self-hosted one.
  std::string base_url;
  std::string path = "/v1/chat/completions";
  /// Name of the environment variable holding the credential. Checked
  /// before any network activity.
  std::string api_key_env = "MLPROMPT_API_KEY";
  RetryPolicy retry;
  /// When set, every HTTP attempt appends one JSON line here.
  std::string transcript_path;
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  GenerationResult complete(const GenerationRequest& request) override;
  std::string id() const override;
  bool single_flight() const override { return false; }

 private:
  HttpBackendConfig config_;
  std::mutex transcript_mutex_;
};

/// Locates the first balanced top-level JSON object in free-form model
/// output and returns it as valid JSON text. Markdown code fences are
/// stripped, single-quoted strings are normalized to double-quoted
/// (outside string bodies only), and every byte outside the changed
/// quotes, numeric literals included, is preserved verbatim. Throws
/// ExtractError when no balanced object exists or the candidate does not
/// parse.
std::string extract_json(const std::string& text);

/// Same contract for a top-level JSON array; used for stepwise output
/// fragments, which are lists rather than objects.
std::string extract_json_array(const std::string& text);

/// Appends one line to a JSONL file, creating it if needed.
void append_jsonl_line(const std::string& path, const std::string& line);

/// UTC timestamp "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace mlprompt

#endif  // MLPROMPT_LLM_HPP
