#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "thoughttree/llm_client.hpp"

namespace thoughttree {

enum class CacheMode { Record, Replay, Passthrough };

CacheMode parse_cache_mode(std::string_view name);
const char* to_string(CacheMode mode) noexcept;

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// Key for a request: SHA-256 over a canonical JSON encoding of
// [prompt, model_name, temperature].
std::string cache_key(const LlmRequest& request);

// Append-only directory of recorded responses, one `<key>.json` file per
// request. Reads may run concurrently; writes are serialized and published by
// atomic rename, and an existing entry is never overwritten.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path directory);

  std::optional<LlmResponse> lookup(const LlmRequest& request) const;
  void store(const LlmRequest& request, const LlmResponse& response);

  const std::filesystem::path& directory() const noexcept { return directory_; }

 private:
  std::filesystem::path entry_path(const std::string& key) const;

  std::filesystem::path directory_;
  std::mutex write_mutex_;
};

// Record/replay front for an upstream client.
//   Record      - serve hits from the cache, forward misses and store them.
//   Replay      - serve hits, throw CacheMiss on anything else.
//   Passthrough - always forward, never touch the cache.
// `upstream` may be null in Replay mode.
class CachingClient final : public LlmClient {
 public:
  CachingClient(ResponseCache& cache, LlmClient* upstream, CacheMode mode);

  LlmResponse complete(const LlmRequest& request) override;

  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t upstream_calls() const noexcept { return upstream_calls_.load(); }

 private:
  LlmResponse forward(const LlmRequest& request);

  ResponseCache& cache_;
  LlmClient* upstream_;
  CacheMode mode_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> upstream_calls_{0};
};

}  // namespace thoughttree
