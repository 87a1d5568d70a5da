#include <gtest/gtest.h>

#include <algorithm>
#include <regex>

#include "generators.hpp"
#include "thoughttree/error.hpp"
#include "thoughttree/segmenter.hpp"

using namespace thoughttree;

namespace {

std::string join(const std::vector<Thought>& ts) {
  std::string s;
  for (const auto& t : ts) s += t.text;
  return s;
}

std::vector<std::string> texts(const std::vector<Thought>& ts) {
  std::vector<std::string> out;
  for (const auto& t : ts) out.push_back(t.text);
  return out;
}

}  // namespace

TEST(Segmenter, HandTracedExample) {
  const auto ts = split_thoughts("Compute A=1. Wait, maybe 2. Alternatively, try 3.",
                                 SeparatorProfile::deepseek_family());
  EXPECT_EQ(texts(ts), (std::vector<std::string>{"Compute A=1. ", "Wait, maybe 2. ", "Alternatively, try 3."}));
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(ts[i].index, i);
  EXPECT_EQ(ts[0].word_count, 2u);
  EXPECT_EQ(ts[1].word_count, 3u);
}

TEST(Segmenter, NoSeparatorGivesOneThought) {
  const auto ts = split_thoughts("Only one line of reasoning.", SeparatorProfile::deepseek_family());
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts[0].text, "Only one line of reasoning.");
}

TEST(Segmenter, EmptyTranscriptThrows) {
  try {
    split_thoughts("", SeparatorProfile::deepseek_family());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(Segmenter, MarkerAtStartOpensThoughtZero) {
  const auto ts = split_thoughts("Wait, hmm. Hmm ok", SeparatorProfile::deepseek_family());
  EXPECT_EQ(texts(ts), (std::vector<std::string>{"Wait, hmm. ", "Hmm ok"}));
}

TEST(Segmenter, LongestMarkerWinsAtSamePosition) {
  SeparatorProfile p("t", {"Verify", "Let me verify", "Let"});
  const auto ts = split_thoughts("x. Let me verify y. Let z", p);
  EXPECT_EQ(texts(ts), (std::vector<std::string>{"x. ", "Let me verify y. ", "Let z"}));
}

TEST(Segmenter, CaseSensitive) {
  const auto ts = split_thoughts("a wait b Wait c", SeparatorProfile::deepseek_family());
  EXPECT_EQ(ts.size(), 2u);
  EXPECT_EQ(split_thoughts("a wait b Wait c", SeparatorProfile::extended()).size(), 3u);
}

TEST(Segmenter, ExtendedIsSupersetOfBase) {
  const auto base = SeparatorProfile::deepseek_family().separators();
  const auto ext = SeparatorProfile::extended().separators();
  for (const auto& s : base) EXPECT_NE(std::find(ext.begin(), ext.end(), s), ext.end()) << s;
  EXPECT_EQ(SeparatorProfile::builtin("extended").name(), "extended");
  EXPECT_THROW(SeparatorProfile::builtin("nope"), Error);
}

TEST(Segmenter, ProfileJsonRoundTrip) {
  const auto p = SeparatorProfile::extended();
  const auto q = SeparatorProfile::from_json(p.to_json());
  EXPECT_EQ(p.name(), q.name());
  EXPECT_EQ(p.separators(), q.separators());
}

TEST(Segmenter, CustomTokenizer) {
  const auto ts = split_thoughts("ab Wait cd", SeparatorProfile::deepseek_family(),
                                 [](std::string_view s) { return s.size(); });
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts[0].token_count, 3u);
  EXPECT_EQ(ts[1].token_count, 7u);
}

// Lossless and count law over random transcripts, checked against a regex
// scan built independently from the profile.
TEST(SegmenterProperty, LosslessAndCountLaw) {
  for (const auto& profile : {SeparatorProfile::deepseek_family(), SeparatorProfile::extended()}) {
    const std::regex re = testgen::separator_regex(profile);
    Rng rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
      const std::string s = testgen::random_transcript(rng, profile);
      const auto ts = split_thoughts(s, profile);
      ASSERT_EQ(join(ts), s);
      ASSERT_EQ(ts.size(), 1 + testgen::count_separators(re, s)) << s;
      ASSERT_EQ(split_thoughts(s, profile), ts);
      for (std::size_t i = 1; i < ts.size(); ++i) ASSERT_FALSE(ts[i].text.empty());
    }
  }
}
