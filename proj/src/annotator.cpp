#include "thoughttree/annotator.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <utility>

#include "prompt_templates.hpp"
#include "thoughttree/error.hpp"
#include "thoughttree/parallel.hpp"

namespace thoughttree {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Substitutes placeholders found in the template only; inserted values are
// never rescanned, so transcripts containing "{{text}}" render literally.
std::string fill(std::string_view tmpl,
                 std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    bool replaced = false;
    for (const auto& [key, value] : values) {
      if (tmpl.substr(pos).starts_with(key)) {
        out.append(value);
        pos += key.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(tmpl[pos++]);
  }
  return out;
}

// JSON string escaping without the surrounding quotes.
std::string json_escape(std::string_view s) {
  const std::string quoted = nlohmann::json(std::string(s)).dump();
  return quoted.substr(1, quoted.size() - 2);
}

// Pulls the outermost {...} object out of a reply that may be wrapped in a
// ```json fence or surrounded by prose.
nlohmann::json extract_json_object(const std::string& raw) {
  const auto open = raw.find('{');
  const auto close = raw.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw AnnotationParseError("response contains no JSON object", raw);
  }
  try {
    auto j = nlohmann::json::parse(raw.substr(open, close - open + 1));
    if (!j.is_object()) throw AnnotationParseError("response JSON is not an object", raw);
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw AnnotationParseError(std::string("malformed JSON in response: ") + e.what(), raw);
  }
}

std::optional<long> parse_prefixed_index(std::string_view token, char prefix) {
  token = trim(token);
  if (!token.empty() && (token.front() == prefix || token.front() == std::tolower(prefix))) {
    token.remove_prefix(1);
  }
  if (token.empty() || token.size() > 9) return std::nullopt;
  long value = 0;
  for (char c : token) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

// One retry with the parse failure appended to the prompt.
template <typename Parser>
auto ask(LlmClient& client, const AnnotatorConfig& config, const std::string& prompt,
         Parser&& parse) {
  LlmRequest request{prompt, config.model_name, config.temperature};
  try {
    return parse(client.complete(request).raw_text);
  } catch (const AnnotationParseError& first) {
    request.prompt = prompt + "\n\nYour previous answer could not be parsed (" + first.what() +
                     "). Answer again using exactly the required output format.";
    return parse(client.complete(request).raw_text);
  }
}

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const AnnotationParseError& e) {
    throw AnnotationParseError(context + ": " + e.what(), e.raw_text());
  } catch (const Error& e) {
    throw Error(e.code(), context + ": " + e.what());
  }
}

}  // namespace

const char* to_string(ThoughtFunction f) noexcept {
  switch (f) {
    case ThoughtFunction::Continuation: return "continuation";
    case ThoughtFunction::Exploration: return "exploration";
    case ThoughtFunction::Backtracking: return "backtracking";
    case ThoughtFunction::Verification: return "verification";
  }
  return "unknown";
}

ThoughtFunction function_from_code(int c) {
  if (c < 1 || c > 4) {
    throw Error(ErrorCode::IntegrityError, "invalid thought function code " + std::to_string(c));
  }
  return static_cast<ThoughtFunction>(c);
}

std::optional<ThoughtFunction> parse_function_name(std::string_view name) {
  std::string key = lower(trim(name));
  // Tolerate an enumerator prefix such as "2. Exploration".
  const auto first_alpha = key.find_first_of("abcdefghijklmnopqrstuvwxyz");
  if (first_alpha == std::string::npos) return std::nullopt;
  key.erase(0, first_alpha);
  if (key == "continuous logic" || key == "continuation" || key == "continuous") {
    return ThoughtFunction::Continuation;
  }
  if (key == "exploration") return ThoughtFunction::Exploration;
  if (key == "backtracking") return ThoughtFunction::Backtracking;
  if (key == "validation" || key == "verification") return ThoughtFunction::Verification;
  return std::nullopt;
}

void to_json(nlohmann::json& j, const ReasoningSketch& s) {
  j = nlohmann::json::array();
  for (const auto& step : s.steps) j.push_back({{"step", step.number}, {"text", step.text}});
}

void from_json(const nlohmann::json& j, ReasoningSketch& s) {
  s.steps.clear();
  for (const auto& e : j) s.steps.push_back({e.at("step").get<int>(), e.at("text").get<std::string>()});
}

void to_json(nlohmann::json& j, const AnnotatedChain& c) {
  nlohmann::json thoughts = nlohmann::json::array();
  for (const auto& t : c.thoughts) {
    nlohmann::json e = t.thought;
    e["steps"] = t.steps;
    e["function"] = t.function ? nlohmann::json(to_string(*t.function)) : nlohmann::json(nullptr);
    thoughts.push_back(std::move(e));
  }
  j = {{"sample_id", c.sample_id},
       {"sketch", c.sketch},
       {"thoughts", std::move(thoughts)},
       {"warnings", c.warnings}};
}

void from_json(const nlohmann::json& j, AnnotatedChain& c) {
  c.sample_id = j.value("sample_id", std::string{});
  c.sketch = j.at("sketch").get<ReasoningSketch>();
  c.thoughts.clear();
  for (const auto& e : j.at("thoughts")) {
    AnnotatedThought t;
    t.thought = e.get<Thought>();
    t.steps = e.value("steps", std::vector<int>{});
    if (e.contains("function") && !e["function"].is_null()) {
      const auto name = e["function"].get<std::string>();
      t.function = parse_function_name(name);
      if (!t.function) throw Error(ErrorCode::ParseError, "unknown thought function: " + name);
    }
    c.thoughts.push_back(std::move(t));
  }
  c.warnings = j.value("warnings", std::vector<std::string>{});
}

std::string render_sketch_prompt(std::string_view transcript) {
  return fill(prompts::kExtractSketch, {{"{{text}}", transcript}});
}

std::string render_assign_prompt(const ReasoningSketch& sketch, std::span<const Thought> batch) {
  std::string list_a;
  for (const auto& step : sketch.steps) {
    if (!list_a.empty()) list_a += '\n';
    list_a += "A" + std::to_string(step.number) + ". " + step.text;
  }
  std::string list_b;
  for (const auto& t : batch) {
    if (!list_b.empty()) list_b += '\n';
    list_b += "B" + std::to_string(t.index) + ". ";
    list_b += trim(t.text);
  }
  return fill(prompts::kAssignSteps, {{"{{reasoning_step}}", list_a}, {"{{thoughts}}", list_b}});
}

std::string render_function_prompt(const Thought& previous, const Thought& current) {
  const std::string text1 = json_escape(trim(previous.text));
  const std::string text2 = json_escape(trim(current.text));
  return fill(prompts::kIdentifyFunction, {{"{TEXT1}", text1}, {"{TEXT2}", text2}});
}

ReasoningSketch parse_sketch_response(const std::string& raw) {
  static const std::string kOpen = "<reasoning_process>";
  static const std::string kClose = "</reasoning_process>";
  const auto open = raw.find(kOpen);
  if (open == std::string::npos) {
    throw AnnotationParseError("response has no <reasoning_process> block", raw);
  }
  const auto body_begin = open + kOpen.size();
  const auto close = raw.find(kClose, body_begin);
  const std::string body =
      raw.substr(body_begin, close == std::string::npos ? std::string::npos : close - body_begin);

  static const std::regex kStepLine(R"(^\s*\**\s*Step\s+(\d+)\s*[.:)]\**\s*(.*)$)",
                                    std::regex::icase);
  ReasoningSketch sketch;
  std::size_t line_begin = 0;
  while (line_begin <= body.size()) {
    auto line_end = body.find('\n', line_begin);
    if (line_end == std::string::npos) line_end = body.size();
    const std::string line = body.substr(line_begin, line_end - line_begin);
    line_begin = line_end + 1;

    std::smatch m;
    if (std::regex_match(line, m, kStepLine)) {
      const int number = std::stoi(m[1].str());
      const int expected = sketch.size() + 1;
      if (number != expected) {
        throw AnnotationParseError("sketch step numbers are not consecutive: expected Step " +
                                       std::to_string(expected) + ", got Step " +
                                       std::to_string(number),
                                   raw);
      }
      sketch.steps.push_back({number, std::string(trim(m[2].str()))});
    } else if (!trim(line).empty() && !sketch.steps.empty()) {
      // Wrapped detail line belongs to the step above it.
      auto& text = sketch.steps.back().text;
      if (!text.empty()) text += ' ';
      text += trim(line);
    }
  }
  if (sketch.steps.empty()) throw AnnotationParseError("sketch has no steps", raw);
  for (const auto& step : sketch.steps) {
    if (step.text.empty()) {
      throw AnnotationParseError("sketch step " + std::to_string(step.number) + " is empty", raw);
    }
  }
  return sketch;
}

std::vector<StepAssignment> parse_assignment_response(const std::string& raw, int sketch_size,
                                                      std::span<const Thought> batch,
                                                      std::vector<std::string>* warnings) {
  auto warn = [&](std::string message) {
    if (warnings) warnings->push_back(std::move(message));
  };
  const nlohmann::json mapping = extract_json_object(raw);

  std::vector<StepAssignment> out;
  out.reserve(batch.size());
  for (const auto& t : batch) out.push_back({t.index, {}});
  auto slot = [&](std::size_t thought_index) -> StepAssignment* {
    for (auto& a : out) {
      if (a.thought_index == thought_index) return &a;
    }
    return nullptr;
  };

  for (const auto& [key, value] : mapping.items()) {
    const auto index = parse_prefixed_index(key, 'B');
    if (!index) throw AnnotationParseError("unrecognised thought key '" + key + "'", raw);
    StepAssignment* target = slot(static_cast<std::size_t>(*index));
    if (!target) {
      warn("assignment for thought B" + std::to_string(*index) + " is outside the batch; ignored");
      continue;
    }
    if (!value.is_array()) {
      throw AnnotationParseError("value for '" + key + "' is not an array", raw);
    }
    for (const auto& item : value) {
      std::optional<long> step;
      if (item.is_number_integer()) {
        step = item.get<long>();
      } else if (item.is_string()) {
        step = parse_prefixed_index(item.get<std::string>(), 'A');
      }
      if (!step) throw AnnotationParseError("unrecognised step reference in '" + key + "'", raw);
      if (*step < 1 || *step > sketch_size) {
        warn("thought " + std::to_string(target->thought_index) + ": step A" +
             std::to_string(*step) + " is outside 1.." + std::to_string(sketch_size) +
             "; dropped");
        continue;
      }
      target->steps.push_back(static_cast<int>(*step));
    }
  }

  for (auto& a : out) {
    std::sort(a.steps.begin(), a.steps.end());
    a.steps.erase(std::unique(a.steps.begin(), a.steps.end()), a.steps.end());
    if (a.steps.empty() && a.thought_index > 0) {
      warn("thought " + std::to_string(a.thought_index) + " has no assigned step");
    }
  }
  return out;
}

ThoughtFunction parse_function_response(const std::string& raw) {
  const nlohmann::json j = extract_json_object(raw);
  const nlohmann::json* category = nullptr;
  for (const auto& [key, value] : j.items()) {
    if (lower(key) == "category") category = &value;
  }
  if (!category || !category->is_string()) {
    throw AnnotationParseError("response has no \"Category\" string", raw);
  }
  const auto name = category->get<std::string>();
  if (auto f = parse_function_name(name)) return *f;
  throw AnnotationParseError("unknown category '" + name + "'", raw);
}

ReasoningSketch extract_sketch(std::string_view transcript, LlmClient& client,
                               const AnnotatorConfig& config) {
  if (trim(transcript).empty()) throw Error(ErrorCode::EmptyInput, "transcript is empty");
  return ask(client, config, render_sketch_prompt(transcript), parse_sketch_response);
}

std::vector<IndexRange> batch_thoughts(std::span<const Thought> thoughts, std::size_t word_limit) {
  std::vector<IndexRange> batches;
  std::size_t begin = 0;
  std::size_t words = 0;
  for (std::size_t i = 0; i < thoughts.size(); ++i) {
    const std::size_t w = thoughts[i].word_count;
    if (i > begin && words + w > word_limit) {
      batches.push_back({begin, i});
      begin = i;
      words = 0;
    }
    words += w;
  }
  if (begin < thoughts.size()) batches.push_back({begin, thoughts.size()});
  return batches;
}

std::vector<StepAssignment> assign_steps(const ReasoningSketch& sketch,
                                         std::span<const Thought> batch, LlmClient& client,
                                         const AnnotatorConfig& config,
                                         std::vector<std::string>* warnings) {
  if (sketch.steps.empty() || batch.empty()) {
    throw Error(ErrorCode::EmptyInput, "assign_steps needs a sketch and a non-empty batch");
  }
  std::vector<std::string> local;
  auto parsed = ask(client, config, render_assign_prompt(sketch, batch),
                    [&](const std::string& raw) {
                      local.clear();
                      return parse_assignment_response(raw, sketch.size(), batch, &local);
                    });
  if (warnings) warnings->insert(warnings->end(), local.begin(), local.end());
  return parsed;
}

ThoughtFunction identify_function(const Thought& previous, const Thought& current,
                                  LlmClient& client, const AnnotatorConfig& config) {
  if (trim(previous.text).empty() || trim(current.text).empty()) {
    throw Error(ErrorCode::EmptyInput, "identify_function needs two non-empty thoughts");
  }
  return ask(client, config, render_function_prompt(previous, current), parse_function_response);
}

AnnotatedChain annotate(std::string_view transcript, std::vector<Thought> thoughts,
                        LlmClient& client, const AnnotatorConfig& config) {
  if (thoughts.empty()) throw Error(ErrorCode::EmptyInput, "no thoughts to annotate");

  AnnotatedChain chain;
  try {
    chain.sketch = extract_sketch(transcript, client, config);
  } catch (const Error&) {
    rethrow_with_context("extract_sketch");
  }

  const auto batches = batch_thoughts(thoughts, config.word_budget);
  struct BatchResult {
    std::vector<StepAssignment> assignments;
    std::vector<std::string> warnings;
  };
  auto batch_results = parallel_map(batches.size(), config.max_in_flight, [&](std::size_t b) {
    const auto range = batches[b];
    BatchResult r;
    try {
      r.assignments = assign_steps(
          chain.sketch, std::span<const Thought>(thoughts).subspan(range.begin, range.size()),
          client, config, &r.warnings);
    } catch (const Error&) {
      rethrow_with_context("assign_steps batch " + std::to_string(b) + " (thoughts " +
                           std::to_string(range.begin) + ".." + std::to_string(range.end - 1) +
                           ")");
    }
    return r;
  });

  auto functions = parallel_map(thoughts.size() - 1, config.max_in_flight, [&](std::size_t k) {
    try {
      return identify_function(thoughts[k], thoughts[k + 1], client, config);
    } catch (const Error&) {
      rethrow_with_context("identify_function thought " + std::to_string(k + 1));
    }
  });

  chain.thoughts.reserve(thoughts.size());
  for (auto& t : thoughts) chain.thoughts.push_back({std::move(t), {}, std::nullopt});
  for (auto& r : batch_results) {
    for (auto& a : r.assignments) chain.thoughts[a.thought_index].steps = std::move(a.steps);
    for (auto& w : r.warnings) chain.warnings.push_back(std::move(w));
  }
  for (std::size_t k = 0; k < functions.size(); ++k) chain.thoughts[k + 1].function = functions[k];
  return chain;
}

AnnotatedChain annotate(std::string_view transcript, const SeparatorProfile& profile,
                        LlmClient& client, const AnnotatorConfig& config) {
  return annotate(transcript, split_thoughts(transcript, profile), client, config);
}

}  // namespace thoughttree
