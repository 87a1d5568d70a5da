#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace thoughttree {

// Counts tokens in a piece of text. The default counts whitespace-delimited
// words; swap in a real tokenizer when one is available.
using Tokenizer = std::function<std::size_t(std::string_view)>;

std::size_t count_words(std::string_view text);
Tokenizer word_tokenizer();

// A named set of literal transition markers. Markers are kept longest-first so
// that the scanner prefers "Let me verify" over "Verify" at the same position.
class SeparatorProfile {
 public:
  SeparatorProfile(std::string name, std::vector<std::string> separators);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& separators() const noexcept { return separators_; }

  // Markers used for DeepSeek-R1 style models.
  static SeparatorProfile deepseek_family();
  // deepseek_family plus the markers observed for Seed/Grok style models.
  static SeparatorProfile extended();
  // Looks up a shipped profile by name ("deepseek-family" or "extended").
  static SeparatorProfile builtin(std::string_view name);

  static SeparatorProfile from_json(const nlohmann::json& j);
  static SeparatorProfile load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

 private:
  std::string name_;
  std::vector<std::string> separators_;
};

struct Thought {
  std::size_t index = 0;
  std::string text;
  std::size_t word_count = 0;
  std::size_t token_count = 0;

  bool operator==(const Thought&) const = default;
};

void to_json(nlohmann::json& j, const Thought& t);
void from_json(const nlohmann::json& j, Thought& t);

// Splits a transcript at every separator occurrence after position 0. The
// separator stays at the head of the thought it opens, so concatenating the
// returned texts reproduces the input exactly. Throws EmptyInput on "".
std::vector<Thought> split_thoughts(std::string_view transcript,
                                    const SeparatorProfile& profile,
                                    const Tokenizer& tokenizer = word_tokenizer());

}  // namespace thoughttree
