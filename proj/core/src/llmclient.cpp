#include "rsica/llmclient.hpp"

#include <httplib.h>
#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <random>
#include <sstream>
#include <thread>

#include "rsica/log.hpp"

namespace rsica {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("endpoint '" + url + "' lacks a scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_transient(int status) { return status == 429 || status >= 500; }

std::string extract_content(const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception& e) {
    throw LlmError(std::string("malformed response body: ") + e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw LlmError("malformed response body: no choices");
  }
  const Json& first = j["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw LlmError("malformed response body: first choice has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

std::string complete_remote(const ChatRequest& request, const RemoteBackend& remote) {
  if (remote.endpoint.empty()) throw InvalidArgument("remote backend needs an endpoint");
  if (remote.api_key.empty()) throw InvalidArgument("remote backend needs a credential");

  const ParsedUrl url = split_url(remote.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(remote.timeout);
  client.set_read_timeout(remote.timeout);
  client.set_write_timeout(remote.timeout);
  const httplib::Headers headers = {
      {"Authorization", "Bearer " + remote.api_key}};
  const std::string body = to_wire_json(request).dump();

  auto backoff = remote.initial_backoff;
  std::string last_failure;
  for (int attempt = 0; attempt <= remote.max_retries; ++attempt) {
    if (attempt > 0) {
      log::warn("chat request failed (" + last_failure + "), retry " +
                std::to_string(attempt) + "/" + std::to_string(remote.max_retries));
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    const auto result = client.Post(url.path, headers, body, "application/json");
    if (!result) {
      last_failure = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 200 && result->status < 300) {
      return extract_content(result->body);
    }
    last_failure = "HTTP status " + std::to_string(result->status);
    if (!is_transient(result->status)) throw LlmError(last_failure);
  }
  throw LlmError("retries exhausted after " + std::to_string(remote.max_retries) +
                 " retries; last failure: " + last_failure);
}

// --- mock backend -----------------------------------------------------------

struct PayloadFacts {
  std::vector<std::string> captions;
  Json counts = Json::object();
  Json contours = Json::object();
};

PayloadFacts read_payload(const std::string& payload) {
  PayloadFacts facts;
  std::istringstream lines(payload);
  std::string line;
  enum class Section { None, Captions, Counts, Contours } section = Section::None;
  while (std::getline(lines, line)) {
    if (line == "Change Captions:") {
      section = Section::Captions;
    } else if (line == "Change Counts:") {
      section = Section::Counts;
    } else if (line == "Change Contours:") {
      section = Section::Contours;
    } else if (section == Section::Captions && line.starts_with("- ")) {
      facts.captions.push_back(line.substr(2));
    } else if (section == Section::Counts || section == Section::Contours) {
      Json parsed = Json::parse(line, nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) {
        (section == Section::Counts ? facts.counts : facts.contours) = parsed;
      }
      section = Section::None;
    }
  }
  return facts;
}

std::string sentence_case(std::string text) {
  if (!text.empty()) {
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  }
  if (!text.empty() && text.back() != '.') text += '.';
  return text;
}

std::string describe_counts(const Json& counts) {
  std::string text;
  std::size_t i = 0;
  for (const auto& [name, value] : counts.items()) {
    if (!value.is_number_integer()) continue;
    const int n = value.get<int>();
    if (i++ > 0) text += " and ";
    text += std::to_string(n) + " new " + (n == 1 ? name : name + "s");
  }
  return text.empty() ? "No changed objects were found." : "There are " + text + ".";
}

std::string describe_location(const Json& contours) {
  for (const auto& [name, polygons] : contours.items()) {
    if (!polygons.is_array() || polygons.empty() || !polygons[0].is_array() ||
        polygons[0].empty()) {
      continue;
    }
    const Json& point = polygons[0][0];
    if (!point.is_array() || point.size() != 2) continue;
    const double x = point[0].get<double>();
    const double y = point[1].get<double>();
    const char* vertical = y < 1.0 / 3 ? "top" : (y < 2.0 / 3 ? "middle" : "bottom");
    const char* horizontal = x < 1.0 / 3 ? "left" : (x < 2.0 / 3 ? "center" : "right");
    return std::string("The first changed ") + name + " is located in the " +
           vertical + " " + horizontal + " part of the image.";
  }
  return "No changed objects were located.";
}

std::string complete_mock(const ChatRequest& request, const MockBackend& mock) {
  const std::string digest =
      sha256_hex(std::to_string(mock.seed) + "\n" + to_wire_json(request).dump());
  std::seed_seq seq(digest.begin(), digest.end());
  std::mt19937_64 rng(seq);

  std::string payload;
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == "user") {
      payload = it->content;
      break;
    }
  }
  const PayloadFacts facts = read_payload(payload);

  static constexpr std::array<std::string_view, 3> kGeneral = {
      "What is the main change that occurred in the area?",
      "What new features have appeared in the images?",
      "Can you summarize how the scene has changed?"};
  const std::string general_answer =
      facts.captions.empty()
          ? "The two images show changes in the observed area."
          : sentence_case(facts.captions[rng() % facts.captions.size()]);

  std::vector<std::pair<std::string, std::string>> pool = {
      {std::string(kGeneral[rng() % kGeneral.size()]), general_answer},
      {"How many roads and buildings have changed?", describe_counts(facts.counts)},
      {"What is the location of the changed objects?",
       describe_location(facts.contours)},
  };
  const std::size_t keep = 1 + rng() % pool.size();
  // Fisher-Yates on raw engine output keeps the result platform independent.
  for (std::size_t i = pool.size() - 1; i > 0; --i) {
    std::swap(pool[i], pool[rng() % (i + 1)]);
  }

  std::string text;
  for (std::size_t i = 0; i < keep; ++i) {
    if (i > 0) text += "\n\n";
    text += "Question: " + pool[i].first + "\nAnswer: " + pool[i].second;
  }
  return text;
}

class InFlightSlot {
 public:
  explicit InFlightSlot(std::counting_semaphore<>& slots) : slots_(slots) {
    slots_.acquire();
  }
  ~InFlightSlot() { slots_.release(); }
  InFlightSlot(const InFlightSlot&) = delete;
  InFlightSlot& operator=(const InFlightSlot&) = delete;

 private:
  std::counting_semaphore<>& slots_;
};

bool trim_char(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '*' || c == '#';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && trim_char(s.front())) s.remove_prefix(1);
  while (!s.empty() && trim_char(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

void validate(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw InvalidArgument("chat request has no messages");
  }
  if (!(request.temperature >= 0.0)) {
    throw InvalidArgument("chat request temperature must be >= 0");
  }
}

Json to_wire_json(const ChatRequest& request) {
  Json messages = Json::array();
  if (!request.system.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system}});
  }
  for (const ChatMessage& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  Json j = Json::object();
  j["model"] = request.model_name;
  j["messages"] = std::move(messages);
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  return j;
}

std::string backend_identity(const Backend& backend) {
  if (const auto* mock = std::get_if<MockBackend>(&backend)) {
    return "mock:" + std::to_string(mock->seed);
  }
  return "remote:" + std::get<RemoteBackend>(backend).endpoint;
}

std::string chat_complete(const ChatRequest& request, const Backend& backend) {
  validate(request);
  if (const auto* mock = std::get_if<MockBackend>(&backend)) {
    return complete_mock(request, *mock);
  }
  return complete_remote(request, std::get<RemoteBackend>(backend));
}

std::string_view to_string(QaKind kind) {
  return kind == QaKind::General ? "general" : "fine_grained";
}

QaKind classify_question(std::string_view question) {
  std::string lower(question);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  if (lower.find("how many") != std::string::npos ||
      lower.find("number") != std::string::npos ||
      lower.find("location") != std::string::npos ||
      std::any_of(lower.begin(), lower.end(),
                  [](unsigned char c) { return std::isdigit(c) != 0; })) {
    return QaKind::FineGrained;
  }
  return QaKind::General;
}

std::vector<QAPair> parse_qa_pairs(std::string_view text) {
  static constexpr std::string_view kQuestion = "Question:";
  static constexpr std::string_view kAnswer = "Answer:";

  std::vector<std::size_t> starts;
  for (auto pos = text.find(kQuestion); pos != std::string_view::npos;
       pos = text.find(kQuestion, pos + kQuestion.size())) {
    starts.push_back(pos);
  }

  std::vector<QAPair> pairs;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto body_start = starts[i] + kQuestion.size();
    const auto body_end = i + 1 < starts.size() ? starts[i + 1] : text.size();
    const std::string_view block = text.substr(body_start, body_end - body_start);
    const auto answer_at = block.find(kAnswer);
    if (answer_at == std::string_view::npos) {
      log::debug("qa parser: question without answer skipped");
      continue;
    }
    const std::string_view question = trim(block.substr(0, answer_at));
    const std::string_view answer = trim(block.substr(answer_at + kAnswer.size()));
    if (question.empty() || answer.empty()) {
      log::debug("qa parser: empty question or answer skipped");
      continue;
    }
    pairs.push_back({std::string(question), std::string(answer),
                     classify_question(question)});
  }
  return pairs;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(),
         digest.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest.size() * 2);
  for (unsigned char b : digest) {
    out += kHex[b >> 4];
    out += kHex[b & 0x0f];
  }
  return out;
}

ChatClient::ChatClient(Backend backend,
                       std::optional<std::filesystem::path> cache_dir,
                       int max_in_flight)
    : backend_(std::move(backend)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(
          std::max(1, max_in_flight))) {
  if (cache_dir) cache_.emplace(*cache_dir);
}

std::string ChatClient::complete(const ChatRequest& request) {
  validate(request);
  if (!cache_) {
    InFlightSlot slot(*in_flight_);
    return chat_complete(request, backend_);
  }

  const std::string key = ResponseCache::key_for(backend_identity(backend_), request);
  std::lock_guard key_lock(cache_->lock_for(key));
  if (auto hit = cache_->get(key)) {
    ++cache_hits_;
    return *hit;
  }
  std::string text;
  {
    InFlightSlot slot(*in_flight_);
    text = chat_complete(request, backend_);
  }
  cache_->put(key, text);
  return text;
}

}  // namespace rsica
