#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include "rsica/llmclient.hpp"

namespace rsica {

ResponseCache::ResponseCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) {
    throw IoError("cannot create cache directory '" + directory_.string() +
                  "': " + ec.message());
  }
}

std::string ResponseCache::key_for(std::string_view backend_identity,
                                   const ChatRequest& request) {
  std::string material(backend_identity);
  material += '\n';
  material += to_wire_json(request).dump();
  return sha256_hex(material);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return directory_ / (key + ".txt");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void ResponseCache::put(const std::string& key, const std::string& value) const {
  const auto final_path = path_for(key);
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  const auto temp_path = final_path.string() + suffix.str();
  {
    std::ofstream out(temp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache entry '" + temp_path + "'");
    out << value;
    if (!out) throw IoError("cannot write cache entry '" + temp_path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(temp_path, final_path, ec);
  if (ec) throw IoError("cannot commit cache entry: " + ec.message());
}

std::mutex& ResponseCache::lock_for(const std::string& key) {
  std::lock_guard lock(table_mutex_);
  auto& slot = key_locks_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

}  // namespace rsica
