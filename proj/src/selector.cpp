#include "thoughttree/selector.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "thoughttree/error.hpp"

namespace thoughttree {

namespace {

void require_nonempty(std::span<const Candidate> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyInput, "no candidates to select from");
}

double score_of(const Candidate& c) {
  if (!c.score) {
    throw Error(ErrorCode::ConfigError, "candidate " + std::to_string(c.candidate_id) + " of question " +
                                            c.question_id + " has no score");
  }
  return *c.score;
}

// Index of the first maximum, for answers kept in first-seen order.
template <typename Value>
std::string best_answer(std::span<const Candidate> candidates, Value value) {
  std::vector<std::string> order;
  std::unordered_map<std::string, double> total;
  for (const auto& c : candidates) {
    auto key = normalize_answer(c.extracted_answer);
    auto [it, fresh] = total.try_emplace(key, 0.0);
    if (fresh) order.push_back(key);
    it->second += value(c);
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (total[order[k]] > total[order[best]]) best = k;
  }
  return order[best];
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!answer.empty() && space(answer.front())) answer.remove_prefix(1);
  while (!answer.empty() && space(answer.back())) answer.remove_suffix(1);
  return std::string(answer);
}

Candidate candidate_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "candidate record must be an object");
  Candidate c;
  try {
    const auto& q = j.at("question_id");
    c.question_id = q.is_string() ? q.get<std::string>() : q.dump();
    c.candidate_id = j.at("candidate_id").get<long>();
    c.transcript_ref = j.value("transcript_ref", std::string{});
    c.extracted_answer = j.at("extracted_answer").get<std::string>();
    const long length = j.at("token_length").get<long>();
    if (length < 1) throw Error(ErrorCode::ConfigError, "token_length must be at least 1");
    c.token_length = static_cast<std::size_t>(length);
    if (j.contains("score") && !j["score"].is_null()) c.score = j["score"].get<double>();
    if (j.contains("external_scores") && !j["external_scores"].is_null()) {
      c.external_scores = j["external_scores"].get<std::map<std::string, double>>();
    }
    if (j.contains("gold_answer") && !j["gold_answer"].is_null()) {
      c.gold_answer = j["gold_answer"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad candidate record: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const Candidate& c) {
  nlohmann::json j = {{"question_id", c.question_id},
                      {"candidate_id", c.candidate_id},
                      {"transcript_ref", c.transcript_ref},
                      {"extracted_answer", c.extracted_answer},
                      {"token_length", c.token_length}};
  if (c.score) j["score"] = *c.score;
  if (!c.external_scores.empty()) j["external_scores"] = c.external_scores;
  if (c.gold_answer) j["gold_answer"] = *c.gold_answer;
  return j;
}

long ours_best(std::span<const Candidate> candidates) {
  require_nonempty(candidates);
  const Candidate* best = &candidates[0];
  double best_score = score_of(*best);
  for (const auto& c : candidates.subspan(1)) {
    const double s = score_of(c);
    if (s > best_score || (s == best_score && c.candidate_id < best->candidate_id)) {
      best = &c;
      best_score = s;
    }
  }
  return best->candidate_id;
}

std::string ours_vote(std::span<const Candidate> candidates) {
  require_nonempty(candidates);
  return best_answer(candidates, score_of);
}

long length_best(std::span<const Candidate> candidates) {
  require_nonempty(candidates);
  const auto it = std::min_element(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return a.token_length != b.token_length ? a.token_length < b.token_length : a.candidate_id < b.candidate_id;
  });
  return it->candidate_id;
}

std::string majority_vote(std::span<const Candidate> candidates) {
  require_nonempty(candidates);
  return best_answer(candidates, [](const Candidate&) { return 1.0; });
}

Strategy parse_strategy(std::string_view name) {
  if (name == "ours-best") return Strategy::OursBest;
  if (name == "ours-vote") return Strategy::OursVote;
  if (name == "length-best") return Strategy::LengthBest;
  if (name == "vote") return Strategy::Vote;
  throw Error(ErrorCode::ConfigError, "unknown strategy '" + std::string(name) + "'");
}

const char* to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::OursBest: return "ours-best";
    case Strategy::OursVote: return "ours-vote";
    case Strategy::LengthBest: return "length-best";
    case Strategy::Vote: return "vote";
  }
  return "unknown";
}

bool needs_scores(Strategy s) noexcept {
  return s == Strategy::OursBest || s == Strategy::OursVote;
}

void use_external_scores(std::span<Candidate> candidates, const std::string& column) {
  for (auto& c : candidates) {
    const auto it = c.external_scores.find(column);
    if (it == c.external_scores.end()) {
      throw Error(ErrorCode::ConfigError, "candidate " + std::to_string(c.candidate_id) + " of question " +
                                              c.question_id + " has no external score '" + column + "'");
    }
    c.score = it->second;
  }
}

std::vector<Question> group_by_question(std::span<const Candidate> candidates,
                                        std::size_t max_per_question) {
  std::vector<Question> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& c : candidates) {
    auto [it, fresh] = index.try_emplace(c.question_id, out.size());
    if (fresh) out.push_back({c.question_id, {}});
    auto& q = out[it->second];
    if (max_per_question == 0 || q.candidates.size() < max_per_question) q.candidates.push_back(c);
  }
  return out;
}

nlohmann::json to_json(const Selection& s) {
  nlohmann::json j = {{"question_id", s.question_id}, {"answer", s.answer}};
  j["candidate_id"] = s.candidate_id ? nlohmann::json(*s.candidate_id) : nlohmann::json(nullptr);
  j["correct"] = s.correct ? nlohmann::json(*s.correct) : nlohmann::json(nullptr);
  return j;
}

Selection select(const Question& question, Strategy strategy) {
  Selection s;
  s.question_id = question.question_id;
  const auto& cands = question.candidates;
  auto answer_of = [&](long id) {
    for (const auto& c : cands) {
      if (c.candidate_id == id) return normalize_answer(c.extracted_answer);
    }
    return std::string{};
  };
  switch (strategy) {
    case Strategy::OursBest:
      s.candidate_id = ours_best(cands);
      s.answer = answer_of(*s.candidate_id);
      break;
    case Strategy::LengthBest:
      s.candidate_id = length_best(cands);
      s.answer = answer_of(*s.candidate_id);
      break;
    case Strategy::OursVote: s.answer = ours_vote(cands); break;
    case Strategy::Vote: s.answer = majority_vote(cands); break;
  }
  for (const auto& c : cands) {
    if (c.gold_answer) {
      s.correct = s.answer == normalize_answer(*c.gold_answer);
      break;
    }
  }
  return s;
}

}  // namespace thoughttree
