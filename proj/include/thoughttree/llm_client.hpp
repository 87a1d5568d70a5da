#pragma once

#include <atomic>
#include <cstddef>
#include <string>

namespace thoughttree {

struct LlmRequest {
  std::string prompt;
  std::string model_name;
  double temperature = 0.0;
};

struct LlmResponse {
  std::string raw_text;
};

// Anything that turns a prompt into completion text. Implementations must be
// safe to call from several threads at once.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual LlmResponse complete(const LlmRequest& request) = 0;
};

struct ChatEndpoint {
  std::string url = "https://api.deepseek.com/chat/completions";
  std::string api_key;
  std::string model = "deepseek-chat";
  double temperature = 0.0;
  int timeout_seconds = 300;

  // Reads THOUGHTTREE_LLM_URL, THOUGHTTREE_LLM_API_KEY and THOUGHTTREE_LLM_MODEL,
  // keeping the defaults above for anything unset.
  static ChatEndpoint from_environment();
};

// OpenAI-compatible chat-completions transport. Each request is sent as a
// single user message; the first choice's message content is returned.
class HttpChatClient final : public LlmClient {
 public:
  explicit HttpChatClient(ChatEndpoint endpoint);

  LlmResponse complete(const LlmRequest& request) override;

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  ChatEndpoint endpoint_;
  std::string scheme_host_port_;
  std::string path_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace thoughttree
