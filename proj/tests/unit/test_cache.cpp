#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "test_paths.hpp"
#include "thoughttree/error.hpp"
#include "thoughttree/parallel.hpp"
#include "thoughttree/response_cache.hpp"

using namespace thoughttree;

namespace {

class CountingClient final : public LlmClient {
 public:
  LlmResponse complete(const LlmRequest& request) override {
    ++calls;
    return {"echo:" + request.prompt};
  }
  std::atomic<int> calls{0};
};

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CacheKey, DependsOnEveryField) {
  const LlmRequest base{"p", "m", 0.0};
  EXPECT_EQ(cache_key(base), cache_key(LlmRequest{"p", "m", 0.0}));
  EXPECT_NE(cache_key(base), cache_key(LlmRequest{"q", "m", 0.0}));
  EXPECT_NE(cache_key(base), cache_key(LlmRequest{"p", "n", 0.0}));
  EXPECT_NE(cache_key(base), cache_key(LlmRequest{"p", "m", 0.7}));
  // Field boundaries cannot be shifted between prompt and model.
  EXPECT_NE(cache_key(LlmRequest{"ab", "c", 0.0}), cache_key(LlmRequest{"a", "bc", 0.0}));
  EXPECT_EQ(cache_key(base).size(), 64u);
}

TEST(CachingClient, RecordThenReplay) {
  TempDir dir;
  ResponseCache cache(dir.path());
  CountingClient upstream;
  {
    CachingClient client(cache, &upstream, CacheMode::Record);
    EXPECT_EQ(client.complete({"hello", "m", 0.0}).raw_text, "echo:hello");
    EXPECT_EQ(client.complete({"hello", "m", 0.0}).raw_text, "echo:hello");
    EXPECT_EQ(upstream.calls, 1);
    EXPECT_EQ(client.hits(), 1u);
    EXPECT_EQ(client.upstream_calls(), 1u);
  }
  ResponseCache reopened(dir.path());
  CachingClient replay(reopened, nullptr, CacheMode::Replay);
  EXPECT_EQ(replay.complete({"hello", "m", 0.0}).raw_text, "echo:hello");
  try {
    replay.complete({"unseen", "m", 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CacheMiss);
  }
}

TEST(CachingClient, PassthroughNeverTouchesCache) {
  TempDir dir;
  ResponseCache cache(dir.path());
  CountingClient upstream;
  CachingClient client(cache, &upstream, CacheMode::Passthrough);
  client.complete({"x", "m", 0.0});
  client.complete({"x", "m", 0.0});
  EXPECT_EQ(upstream.calls, 2);
  EXPECT_FALSE(cache.lookup({"x", "m", 0.0}).has_value());
}

TEST(ResponseCache, EntriesAreNeverOverwritten) {
  TempDir dir;
  ResponseCache cache(dir.path());
  cache.store({"p", "m", 0.0}, {"first"});
  cache.store({"p", "m", 0.0}, {"second"});
  EXPECT_EQ(cache.lookup({"p", "m", 0.0})->raw_text, "first");
}

TEST(ResponseCache, ConcurrentRecord) {
  TempDir dir;
  ResponseCache cache(dir.path());
  CountingClient upstream;
  CachingClient client(cache, &upstream, CacheMode::Record);
  parallel_map(64, 8, [&](std::size_t i) { return client.complete({"p" + std::to_string(i % 16), "m", 0.0}); });
  for (int i = 0; i < 16; ++i) {
    EXPECT_EQ(cache.lookup({"p" + std::to_string(i), "m", 0.0})->raw_text, "echo:p" + std::to_string(i));
  }
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) files += e.path().extension() == ".json";
  EXPECT_EQ(files, 16u);
}

TEST(CacheMode, Names) {
  EXPECT_EQ(parse_cache_mode("record"), CacheMode::Record);
  EXPECT_EQ(parse_cache_mode("replay"), CacheMode::Replay);
  EXPECT_EQ(parse_cache_mode("passthrough"), CacheMode::Passthrough);
  EXPECT_THROW(parse_cache_mode("offline"), Error);
}

TEST(ParallelMap, OrderAndLowestFailure) {
  const auto out = parallel_map(50, 4, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], i * i);
  try {
    parallel_map(20, 4, [](std::size_t i) -> int {
      if (i == 7 || i == 13) throw std::runtime_error("fail " + std::to_string(i));
      return 0;
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "fail 7");
  }
}
