#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thoughttree/annotator.hpp"
#include "thoughttree/featurizer.hpp"
#include "thoughttree/tree_builder.hpp"

namespace thoughttree {

// ---- JSONL -----------------------------------------------------------------

// One JSON value per non-blank line. A malformed line throws ParseError
// naming the file and the 1-based line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, std::span<const nlohmann::json> rows);

nlohmann::json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; parent directories are created.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Regular *.json files directly inside `dir`, sorted by name.
std::vector<std::filesystem::path> list_json_files(const std::filesystem::path& dir);

// ---- Records ---------------------------------------------------------------

// Which label values count as positive and negative. Besides these two
// strings, 1/0 and true/false are always accepted.
struct LabelSet {
  std::string positive = "positive";
  std::string negative = "negative";
};

void to_json(nlohmann::json& j, const LabelSet& l);
void from_json(const nlohmann::json& j, LabelSet& l);

std::optional<int> parse_label(const nlohmann::json& value, const LabelSet& labels);

struct DatasetRecord {
  std::string sample_id;
  std::string transcript;
  std::optional<int> label;
  nlohmann::json metadata = nlohmann::json::object();
};

DatasetRecord record_from_json(const nlohmann::json& j, const LabelSet& labels = {});
nlohmann::json to_json(const DatasetRecord& r);

// Sample ids become file names, so they are limited to [A-Za-z0-9._-] and
// must not start with a dot.
void check_sample_id(const std::string& id);

// Reads a record file and rejects duplicate or unsafe sample ids.
std::vector<DatasetRecord> read_records(const std::filesystem::path& path, const LabelSet& labels = {});

// ---- Tree documents ----------------------------------------------------------

// Everything needed to featurize, explain, or draw one tree.
struct TreeDocument {
  std::string sample_id;
  std::optional<int> label;
  ReasoningSketch sketch;
  std::vector<Thought> thoughts;
  ReasoningTree tree;
  std::optional<std::vector<double>> importance;  // one per tree edge
  nlohmann::json metadata = nlohmann::json::object();
};

TreeDocument make_document(const AnnotatedChain& chain, std::optional<int> label,
                           nlohmann::json metadata = nlohmann::json::object());
nlohmann::json to_json(const TreeDocument& doc);
TreeDocument document_from_json(const nlohmann::json& j);

GraphSample featurize(const TreeDocument& doc);

// ---- Splits ------------------------------------------------------------------

struct SplitRatio {
  int train = 4;
  int test = 1;
};

// Parses "a:b" with positive integers.
SplitRatio parse_ratio(const std::string& text);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified by label: each class is shuffled with the seeded generator and
// round(n_c * train / (train + test)) of it goes to train. Indices come back
// in input order. Throws DegenerateDataset when unlabeled samples are present
// or either class is missing from the train part.
Split stratified_split(std::span<const std::optional<int>> labels, SplitRatio ratio, std::uint64_t seed);

}  // namespace thoughttree
