#include "thoughttree/response_cache.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "thoughttree/error.hpp"

namespace thoughttree {

namespace fs = std::filesystem;

CacheMode parse_cache_mode(std::string_view name) {
  if (name == "record") return CacheMode::Record;
  if (name == "replay") return CacheMode::Replay;
  if (name == "passthrough") return CacheMode::Passthrough;
  throw Error(ErrorCode::ConfigError, "unknown cache mode: " + std::string(name));
}

const char* to_string(CacheMode mode) noexcept {
  switch (mode) {
    case CacheMode::Record: return "record";
    case CacheMode::Replay: return "replay";
    case CacheMode::Passthrough: return "passthrough";
  }
  return "unknown";
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

std::string cache_key(const LlmRequest& request) {
  const nlohmann::json material = {request.prompt, request.model_name, request.temperature};
  return sha256_hex(material.dump());
}

ResponseCache::ResponseCache(fs::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create cache directory " + directory_.string());
}

fs::path ResponseCache::entry_path(const std::string& key) const {
  return directory_ / (key + ".json");
}

std::optional<LlmResponse> ResponseCache::lookup(const LlmRequest& request) const {
  std::ifstream in(entry_path(cache_key(request)));
  if (!in) return std::nullopt;
  try {
    const auto entry = nlohmann::json::parse(in);
    return LlmResponse{entry.at("response").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IntegrityError,
                "corrupt cache entry for key " + cache_key(request) + ": " + e.what());
  }
}

void ResponseCache::store(const LlmRequest& request, const LlmResponse& response) {
  const std::string key = cache_key(request);
  const fs::path target = entry_path(key);

  std::lock_guard lock(write_mutex_);
  if (fs::exists(target)) return;

  const nlohmann::json entry = {{"key", key},
                                {"model", request.model_name},
                                {"temperature", request.temperature},
                                {"prompt", request.prompt},
                                {"response", response.raw_text}};
  std::ostringstream tid;
  tid << std::this_thread::get_id();
  const fs::path tmp = directory_ / ("." + key + "." + tid.str() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << entry.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "cannot write cache entry " + tmp.string());
  }
  fs::rename(tmp, target);
}

CachingClient::CachingClient(ResponseCache& cache, LlmClient* upstream, CacheMode mode)
    : cache_(cache), upstream_(upstream), mode_(mode) {
  if (mode_ != CacheMode::Replay && upstream_ == nullptr) {
    throw Error(ErrorCode::ConfigError,
                std::string("cache mode '") + to_string(mode_) + "' needs an upstream client");
  }
}

LlmResponse CachingClient::forward(const LlmRequest& request) {
  ++upstream_calls_;
  return upstream_->complete(request);
}

LlmResponse CachingClient::complete(const LlmRequest& request) {
  if (mode_ == CacheMode::Passthrough) return forward(request);

  if (auto hit = cache_.lookup(request)) {
    ++hits_;
    return *hit;
  }
  if (mode_ == CacheMode::Replay) {
    throw Error(ErrorCode::CacheMiss, "no recorded response for key " + cache_key(request) +
                                          " in " + cache_.directory().string());
  }
  LlmResponse response = forward(request);
  cache_.store(request, response);
  return response;
}

}  // namespace thoughttree
