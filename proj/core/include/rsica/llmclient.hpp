#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rsica/error.hpp"
#include "rsica/json_format.hpp"

namespace rsica {

class LlmError : public Error {
 public:
  using Error::Error;
};

struct ChatMessage {
  std::string role;  // "user" | "assistant"
  std::string content;
};

struct ChatRequest {
  std::string system;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string model_name;
};

// Throws InvalidArgument when messages are empty or temperature < 0.
void validate(const ChatRequest& request);

// Chat-completions body: {"model","messages":[{"role","content"}...],
// "temperature","max_tokens"}; the system text becomes the first message.
Json to_wire_json(const ChatRequest& request);

// Remote OpenAI-compatible endpoint, e.g.
// "https://api.openai.com/v1/chat/completions".
struct RemoteBackend {
  std::string endpoint;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};
};

// Offline stand-in; output is a pure function of (seed, request bytes).
struct MockBackend {
  std::uint64_t seed = 0;
};

using Backend = std::variant<RemoteBackend, MockBackend>;

// Stable description of a backend without credentials; part of cache keys.
std::string backend_identity(const Backend& backend);

// Remote calls retry network failures, 429 and 5xx responses up to
// max_retries times with doubling back-off; other statuses and malformed
// bodies fail immediately. Throws LlmError.
std::string chat_complete(const ChatRequest& request, const Backend& backend);

enum class QaKind { General, FineGrained };
std::string_view to_string(QaKind kind);

struct QAPair {
  std::string question;
  std::string answer;
  QaKind kind = QaKind::General;
};

// Fine-grained when the question mentions "how many", "number", "location"
// or contains a digit.
QaKind classify_question(std::string_view question);

// Lenient extraction of "Question: ... Answer: ..." blocks in order. Both
// strings are trimmed substrings of `text`; malformed blocks are skipped.
std::vector<QAPair> parse_qa_pairs(std::string_view text);

// Content-addressed response store: one file per request hash.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);

  static std::string key_for(std::string_view backend_identity,
                             const ChatRequest& request);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& value) const;

  // Callers hold this while doing get -> compute -> put for one key.
  std::mutex& lock_for(const std::string& key);

  const std::filesystem::path& directory() const noexcept { return directory_; }

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path directory_;
  std::mutex table_mutex_;
  std::unordered_map<std::string, std::unique_ptr<std::mutex>> key_locks_;
};

// Backend + optional cache + cap on concurrent requests. Thread-safe.
class ChatClient {
 public:
  ChatClient(Backend backend, std::optional<std::filesystem::path> cache_dir,
             int max_in_flight = 4);

  std::string complete(const ChatRequest& request);

  const Backend& backend() const noexcept { return backend_; }
  std::size_t cache_hits() const noexcept { return cache_hits_; }

 private:
  Backend backend_;
  std::optional<ResponseCache> cache_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  std::atomic<std::size_t> cache_hits_{0};
};

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace rsica
