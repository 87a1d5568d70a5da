#include "thoughttree/segmenter.hpp"

#include <algorithm>
#include <fstream>

#include "thoughttree/error.hpp"

namespace thoughttree {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length of the longest separator that matches at `pos`, or 0.
std::size_t match_at(std::string_view text, std::size_t pos,
                     const std::vector<std::string>& longest_first) {
  const std::string_view rest = text.substr(pos);
  for (const auto& sep : longest_first) {
    if (rest.starts_with(sep)) return sep.size();
  }
  return 0;
}

}  // namespace

std::size_t count_words(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_ascii_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  return words;
}

Tokenizer word_tokenizer() { return [](std::string_view t) { return count_words(t); }; }

SeparatorProfile::SeparatorProfile(std::string name, std::vector<std::string> separators)
    : name_(std::move(name)), separators_(std::move(separators)) {
  if (separators_.empty()) {
    throw Error(ErrorCode::ConfigError, "separator profile '" + name_ + "' has no separators");
  }
  for (const auto& s : separators_) {
    if (s.empty()) {
      throw Error(ErrorCode::ConfigError,
                  "separator profile '" + name_ + "' contains an empty separator");
    }
  }
  // Stable so that equal-length markers keep their declared order.
  std::stable_sort(separators_.begin(), separators_.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
}

SeparatorProfile SeparatorProfile::deepseek_family() {
  return SeparatorProfile("deepseek-family", {"Alternatively", "Hmm", "Let me verify",
                                              "let's verify", "To verify", "Wait", "Verify"});
}

SeparatorProfile SeparatorProfile::extended() {
  return SeparatorProfile(
      "extended", {"Alternatively", "Hmm", "Let me verify", "let's verify", "To verify", "Wait",
                   "Verify", "Let's confirm", "Let's check", "Another example", "But let's",
                   "wait", "No:", "no:", "Now"});
}

SeparatorProfile SeparatorProfile::builtin(std::string_view name) {
  if (name == "deepseek-family") return deepseek_family();
  if (name == "extended") return extended();
  throw Error(ErrorCode::ConfigError, "unknown separator profile: " + std::string(name));
}

SeparatorProfile SeparatorProfile::from_json(const nlohmann::json& j) {
  try {
    return SeparatorProfile(j.at("name").get<std::string>(),
                            j.at("separators").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid separator profile: ") + e.what());
  }
}

SeparatorProfile SeparatorProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open profile " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json SeparatorProfile::to_json() const {
  return {{"name", name_}, {"separators", separators_}};
}

void to_json(nlohmann::json& j, const Thought& t) {
  j = {{"index", t.index},
       {"text", t.text},
       {"word_count", t.word_count},
       {"token_count", t.token_count}};
}

void from_json(const nlohmann::json& j, Thought& t) {
  t.index = j.at("index").get<std::size_t>();
  t.text = j.at("text").get<std::string>();
  t.word_count = j.value("word_count", count_words(t.text));
  t.token_count = j.value("token_count", t.word_count);
}

std::vector<Thought> split_thoughts(std::string_view transcript, const SeparatorProfile& profile,
                                    const Tokenizer& tokenizer) {
  if (transcript.empty()) throw Error(ErrorCode::EmptyInput, "transcript is empty");

  const auto& seps = profile.separators();
  std::vector<std::size_t> starts{0};

  // A marker at position 0 opens thought 0 rather than an empty leading one.
  std::size_t pos = match_at(transcript, 0, seps);
  if (pos == 0) pos = 1;
  while (pos < transcript.size()) {
    if (const std::size_t len = match_at(transcript, pos, seps); len > 0) {
      starts.push_back(pos);
      pos += len;
    } else {
      ++pos;
    }
  }

  std::vector<Thought> thoughts;
  thoughts.reserve(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const std::size_t end = i + 1 < starts.size() ? starts[i + 1] : transcript.size();
    Thought t;
    t.index = i;
    t.text = std::string(transcript.substr(starts[i], end - starts[i]));
    t.word_count = count_words(t.text);
    t.token_count = tokenizer(t.text);
    thoughts.push_back(std::move(t));
  }
  return thoughts;
}

}  // namespace thoughttree
