#include "thoughttree/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "thoughttree/error.hpp"
#include "thoughttree/rng.hpp"

namespace fs = std::filesystem;

namespace thoughttree {

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<nlohmann::json> rows;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return rows;
}

void write_jsonl(const fs::path& path, std::span<const nlohmann::json> rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file(const fs::path& path) {
  const auto text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out.flush()) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void write_json_file(const fs::path& path, const nlohmann::json& value) {
  write_text_file(path, value.dump(2) + "\n");
}

std::vector<fs::path> list_json_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void to_json(nlohmann::json& j, const LabelSet& l) {
  j = {{"positive", l.positive}, {"negative", l.negative}};
}

void from_json(const nlohmann::json& j, LabelSet& l) {
  const LabelSet d;
  l.positive = j.value("positive", d.positive);
  l.negative = j.value("negative", d.negative);
  if (l.positive == l.negative) throw Error(ErrorCode::ConfigError, "positive and negative labels must differ");
}

std::optional<int> parse_label(const nlohmann::json& value, const LabelSet& labels) {
  if (value.is_null()) return std::nullopt;
  if (value.is_boolean()) return value.get<bool>() ? 1 : 0;
  if (value.is_number_integer()) {
    const auto v = value.get<long>();
    if (v == 0 || v == 1) return static_cast<int>(v);
  }
  if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == labels.positive) return 1;
    if (s == labels.negative) return 0;
  }
  throw Error(ErrorCode::ConfigError, "label " + value.dump() + " is not in the declared label set {" +
                                          labels.positive + ", " + labels.negative + "}");
}

void check_sample_id(const std::string& id) {
  const bool ok = !id.empty() && id.front() != '.' && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
  });
  if (!ok) throw Error(ErrorCode::ConfigError, "sample id '" + id + "' must match [A-Za-z0-9._-]+");
}

DatasetRecord record_from_json(const nlohmann::json& j, const LabelSet& labels) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "record must be a JSON object");
  DatasetRecord r;
  try {
    r.sample_id = j.at("sample_id").get<std::string>();
    r.transcript = j.at("transcript").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad record: ") + e.what());
  }
  check_sample_id(r.sample_id);
  if (j.contains("label")) r.label = parse_label(j["label"], labels);
  if (j.contains("metadata") && j["metadata"].is_object()) r.metadata = j["metadata"];
  return r;
}

nlohmann::json to_json(const DatasetRecord& r) {
  return {{"sample_id", r.sample_id},
          {"transcript", r.transcript},
          {"label", r.label ? nlohmann::json(*r.label) : nlohmann::json(nullptr)},
          {"metadata", r.metadata}};
}

std::vector<DatasetRecord> read_records(const fs::path& path, const LabelSet& labels) {
  const auto rows = read_jsonl(path);
  std::vector<DatasetRecord> out;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    try {
      out.push_back(record_from_json(rows[k], labels));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": record " + std::to_string(k + 1) + ": " + e.what());
    }
    if (!seen.insert(out.back().sample_id).second) {
      throw Error(ErrorCode::ConfigError, path.string() + ": duplicate sample id " + out.back().sample_id);
    }
  }
  return out;
}

TreeDocument make_document(const AnnotatedChain& chain, std::optional<int> label, nlohmann::json metadata) {
  TreeDocument doc;
  doc.sample_id = chain.sample_id;
  doc.label = label;
  doc.sketch = chain.sketch;
  for (const auto& t : chain.thoughts) doc.thoughts.push_back(t.thought);
  doc.tree = build_tree(chain);
  doc.metadata = std::move(metadata);
  return doc;
}

nlohmann::json to_json(const TreeDocument& doc) {
  nlohmann::json tree = tree_to_json(doc.tree);
  if (doc.importance) {
    if (doc.importance->size() != doc.tree.edges().size()) {
      throw Error(ErrorCode::ShapeError, "importance has " + std::to_string(doc.importance->size()) +
                                             " entries for " + std::to_string(doc.tree.edges().size()) + " edges");
    }
    for (std::size_t k = 0; k < doc.importance->size(); ++k) tree["edges"][k]["importance"] = (*doc.importance)[k];
  }
  nlohmann::json thoughts = nlohmann::json::array();
  for (const auto& t : doc.thoughts) {
    thoughts.push_back({{"index", t.index}, {"token_count", t.token_count}, {"text", t.text}});
  }
  return {{"sample_id", doc.sample_id},
          {"label", doc.label ? nlohmann::json(*doc.label) : nlohmann::json(nullptr)},
          {"metadata", doc.metadata},
          {"sketch", doc.sketch},
          {"thoughts", std::move(thoughts)},
          {"tree", std::move(tree)}};
}

TreeDocument document_from_json(const nlohmann::json& j) {
  TreeDocument doc;
  try {
    doc.sample_id = j.value("sample_id", std::string{});
    if (j.contains("label")) doc.label = parse_label(j["label"], {});
    if (j.contains("metadata") && j["metadata"].is_object()) doc.metadata = j["metadata"];
    doc.sketch = j.value("sketch", ReasoningSketch{});
    for (const auto& t : j.at("thoughts")) {
      Thought th;
      th.index = t.at("index").get<std::size_t>();
      th.token_count = t.at("token_count").get<std::size_t>();
      th.text = t.value("text", std::string{});
      th.word_count = count_words(th.text);
      doc.thoughts.push_back(std::move(th));
    }
    const auto& tree = j.at("tree");
    doc.tree = tree_from_json(tree);
    const auto& edges = tree.at("edges");
    if (!edges.empty() && edges[0].contains("importance")) {
      std::vector<double> w;
      for (const auto& e : edges) w.push_back(e.at("importance").get<double>());
      doc.importance = std::move(w);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad tree document: ") + e.what());
  }
  for (std::size_t k = 0; k < doc.thoughts.size(); ++k) {
    if (doc.thoughts[k].index != k) throw Error(ErrorCode::IntegrityError, "thought indices are not 0..N-1");
  }
  return doc;
}

GraphSample featurize(const TreeDocument& doc) {
  std::vector<std::size_t> tokens;
  tokens.reserve(doc.thoughts.size());
  for (const auto& t : doc.thoughts) tokens.push_back(t.token_count);
  return featurize(doc.tree, tokens, doc.sample_id, doc.label);
}

SplitRatio parse_ratio(const std::string& text) {
  const auto colon = text.find(':');
  SplitRatio r;
  try {
    if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
    std::size_t used = 0;
    r.train = std::stoi(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("trailing characters");
    const auto rest = text.substr(colon + 1);
    r.test = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "split ratio '" + text + "' must look like 4:1");
  }
  if (r.train <= 0 || r.test <= 0) throw Error(ErrorCode::ConfigError, "split ratio parts must be positive");
  return r;
}

Split stratified_split(std::span<const std::optional<int>> labels, SplitRatio ratio, std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) throw Error(ErrorCode::DegenerateDataset, "sample " + std::to_string(i) + " has no label");
    by_class[*labels[i]].push_back(i);
  }
  Rng rng(seed);
  Split split;
  const double share = static_cast<double>(ratio.train) / (ratio.train + ratio.test);
  for (int c = 0; c < 2; ++c) {
    auto& idx = by_class[c];
    rng.shuffle(std::span<std::size_t>(idx));
    const auto take = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * share));
    if (take == 0) {
      throw Error(ErrorCode::DegenerateDataset,
                  std::string("the train split has no ") + (c == 1 ? "positive" : "negative") + " samples");
    }
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace thoughttree
