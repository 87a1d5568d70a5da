#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace thoughttree {

struct Candidate {
  std::string question_id;
  long candidate_id = 0;
  std::string transcript_ref;
  std::string extracted_answer;
  std::size_t token_length = 1;
  std::optional<double> score;
  std::map<std::string, double> external_scores;
  std::optional<std::string> gold_answer;
};

// Reads one candidate-file record. Throws ParseError on a missing or
// mistyped field and ConfigError when token_length < 1.
Candidate candidate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Candidate& c);

// Whitespace-trimmed copy used for every answer comparison.
std::string normalize_answer(std::string_view answer);

// Highest score; ties go to the lowest candidate_id.
long ours_best(std::span<const Candidate> candidates);
// Answer with the largest summed score; ties go to the answer seen first.
std::string ours_vote(std::span<const Candidate> candidates);
// Fewest tokens; ties go to the lowest candidate_id.
long length_best(std::span<const Candidate> candidates);
// Most frequent answer; ties go to the answer seen first.
std::string majority_vote(std::span<const Candidate> candidates);

enum class Strategy { OursBest, OursVote, LengthBest, Vote };
Strategy parse_strategy(std::string_view name);
const char* to_string(Strategy s) noexcept;
bool needs_scores(Strategy s) noexcept;

// Copies external_scores[column] into score for every candidate; throws
// ConfigError when a candidate lacks the column.
void use_external_scores(std::span<Candidate> candidates, const std::string& column);

struct Question {
  std::string question_id;
  std::vector<Candidate> candidates;
};

// Groups candidates by question in first-seen order, keeping at most
// `max_per_question` candidates (file order) when it is non-zero.
std::vector<Question> group_by_question(std::span<const Candidate> candidates,
                                        std::size_t max_per_question = 0);

struct Selection {
  std::string question_id;
  std::optional<long> candidate_id;  // set by the per-candidate strategies
  std::string answer;
  std::optional<bool> correct;       // set when a gold answer is known
};

nlohmann::json to_json(const Selection& s);

Selection select(const Question& question, Strategy strategy);

}  // namespace thoughttree
