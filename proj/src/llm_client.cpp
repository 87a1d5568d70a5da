#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "thoughttree/llm_client.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "thoughttree/error.hpp"

namespace thoughttree {

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* value = std::getenv(name);
  return value && *value ? std::string(value) : std::move(fallback);
}

}  // namespace

ChatEndpoint ChatEndpoint::from_environment() {
  ChatEndpoint e;
  e.url = env_or("THOUGHTTREE_LLM_URL", e.url);
  e.api_key = env_or("THOUGHTTREE_LLM_API_KEY", e.api_key);
  e.model = env_or("THOUGHTTREE_LLM_MODEL", e.model);
  return e;
}

HttpChatClient::HttpChatClient(ChatEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  const auto scheme_end = endpoint_.url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigError, "endpoint URL has no scheme: " + endpoint_.url);
  }
  const auto path_begin = endpoint_.url.find('/', scheme_end + 3);
  scheme_host_port_ = endpoint_.url.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "/" : endpoint_.url.substr(path_begin);
}

LlmResponse HttpChatClient::complete(const LlmRequest& request) {
  ++calls_;
  httplib::Client client(scheme_host_port_);
  client.set_read_timeout(endpoint_.timeout_seconds, 0);
  client.set_write_timeout(endpoint_.timeout_seconds, 0);

  const nlohmann::json payload = {
      {"model", request.model_name},
      {"temperature", request.temperature},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
  };
  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
  }

  auto result = client.Post(path_, headers, payload.dump(), "application/json");
  if (!result) {
    throw Error(ErrorCode::TransportError,
                "request to " + endpoint_.url + " failed: " + httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::TransportError, "annotator endpoint returned HTTP " +
                                               std::to_string(result->status) + ": " +
                                               result->body.substr(0, 512));
  }

  try {
    const auto body = nlohmann::json::parse(result->body);
    return {body.at("choices").at(0).at("message").at("content").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::TransportError,
                std::string("unexpected chat-completion payload: ") + e.what());
  }
}

}  // namespace thoughttree
