#include "thoughttree/featurizer.hpp"

#include <cmath>
#include <map>

#include "thoughttree/error.hpp"

namespace thoughttree {

int edge_category(int signed_code) {
  if (signed_code >= 1 && signed_code <= 4) return signed_code - 1;
  if (signed_code <= -1 && signed_code >= -4) return 3 - signed_code;
  throw Error(ErrorCode::IntegrityError, "invalid signed edge code " + std::to_string(signed_code));
}

void to_json(nlohmann::json& j, const GraphSample& g) {
  nlohmann::json features = nlohmann::json::array();
  for (Eigen::Index r = 0; r < g.node_features.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < g.node_features.cols(); ++c) row.push_back(g.node_features(r, c));
    features.push_back(std::move(row));
  }
  nlohmann::json edge_index = nlohmann::json::array();
  nlohmann::json edge_codes = nlohmann::json::array();
  for (const auto& e : g.edges) {
    edge_index.push_back({e.src, e.dst});
    edge_codes.push_back(e.code);
  }
  j = {{"sample_id", g.sample_id},
       {"node_features", std::move(features)},
       {"edge_index", std::move(edge_index)},
       {"edge_codes", std::move(edge_codes)},
       {"token_length", g.token_length},
       {"label", g.label ? nlohmann::json(*g.label) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, GraphSample& g) {
  g.sample_id = j.value("sample_id", std::string{});
  const auto& features = j.at("node_features");
  g.node_features.resize(static_cast<Eigen::Index>(features.size()), kNodeFeatureCount);
  for (std::size_t r = 0; r < features.size(); ++r) {
    if (features[r].size() != kNodeFeatureCount) {
      throw Error(ErrorCode::ShapeError, "node feature row " + std::to_string(r) + " has " +
                                             std::to_string(features[r].size()) + " columns");
    }
    for (int c = 0; c < kNodeFeatureCount; ++c) {
      g.node_features(static_cast<Eigen::Index>(r), c) = features[r][c].get<double>();
    }
  }
  const auto& index = j.at("edge_index");
  const auto& codes = j.at("edge_codes");
  if (index.size() != codes.size()) {
    throw Error(ErrorCode::ShapeError, "edge_index and edge_codes differ in length");
  }
  g.edges.clear();
  for (std::size_t k = 0; k < index.size(); ++k) {
    DirectedEdge e{index[k].at(0).get<std::size_t>(), index[k].at(1).get<std::size_t>(),
                   codes[k].get<int>()};
    if (e.src >= g.num_nodes() || e.dst >= g.num_nodes()) {
      throw Error(ErrorCode::IntegrityError, "edge " + std::to_string(k) + " references a missing node");
    }
    edge_category(e.code);
    g.edges.push_back(e);
  }
  g.token_length = j.value("token_length", std::size_t{0});
  if (j.contains("label") && !j["label"].is_null()) {
    g.label = j["label"].get<int>();
  } else {
    g.label.reset();
  }
}

GraphSample featurize(const ReasoningTree& tree, std::span<const std::size_t> thought_tokens,
                      std::string sample_id, std::optional<int> label) {
  std::vector<double> cumulative(thought_tokens.size());
  double running = 0;
  for (std::size_t i = 0; i < thought_tokens.size(); ++i) {
    running += static_cast<double>(thought_tokens[i]);
    cumulative[i] = running;
  }

  GraphSample g;
  g.sample_id = std::move(sample_id);
  g.label = label;
  g.token_length = static_cast<std::size_t>(running);
  g.node_features.resize(static_cast<Eigen::Index>(tree.size()), kNodeFeatureCount);

  std::map<int, int> seen_at_step;
  for (const auto& n : tree.nodes()) {
    const bool is_root = n.id == tree.root();
    if (!is_root && n.thought_index >= thought_tokens.size()) {
      throw Error(ErrorCode::IntegrityError, "node " + std::to_string(n.id) + " references thought " +
                                                 std::to_string(n.thought_index) + " of " +
                                                 std::to_string(thought_tokens.size()));
    }
    const auto r = static_cast<Eigen::Index>(n.id);
    g.node_features(r, kThoughtIndex) = is_root ? 0.0 : static_cast<double>(n.thought_index);
    g.node_features(r, kStep) = n.step;
    g.node_features(r, kCumulativeTokens) = is_root ? 0.0 : cumulative[n.thought_index];
    g.node_features(r, kChildCount) = static_cast<double>(tree.children(n.id).size());
    g.node_features(r, kStepOccupancy) = ++seen_at_step[n.step];
  }

  g.edges.reserve(2 * tree.edges().size());
  for (const auto& e : tree.edges()) {
    g.edges.push_back({e.parent, e.child, code(e.function)});
    g.edges.push_back({e.child, e.parent, -code(e.function)});
  }
  return g;
}

NormalizationStats NormalizationStats::fit(std::span<const GraphSample> samples) {
  NormalizationStats s;
  std::array<double, kNodeFeatureCount> sum{};
  std::size_t rows = 0;
  auto value = [](const GraphSample& g, Eigen::Index r, int c) {
    const double v = g.node_features(r, c);
    return c == kCumulativeTokens ? std::log1p(v) : v;
  };
  for (const auto& g : samples) {
    for (Eigen::Index r = 0; r < g.node_features.rows(); ++r) {
      for (int c = 0; c < kNodeFeatureCount; ++c) sum[c] += value(g, r, c);
    }
    rows += g.num_nodes();
  }
  if (rows == 0) {
    s.stddev.fill(1.0);
    return s;
  }
  for (int c = 0; c < kNodeFeatureCount; ++c) s.mean[c] = sum[c] / static_cast<double>(rows);

  std::array<double, kNodeFeatureCount> sq{};
  for (const auto& g : samples) {
    for (Eigen::Index r = 0; r < g.node_features.rows(); ++r) {
      for (int c = 0; c < kNodeFeatureCount; ++c) {
        const double d = value(g, r, c) - s.mean[c];
        sq[c] += d * d;
      }
    }
  }
  for (int c = 0; c < kNodeFeatureCount; ++c) {
    const double sd = std::sqrt(sq[c] / static_cast<double>(rows));
    s.stddev[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

FeatureMatrix NormalizationStats::apply(const FeatureMatrix& raw) const {
  if (raw.cols() != kNodeFeatureCount) {
    throw Error(ErrorCode::ShapeError, "expected " + std::to_string(kNodeFeatureCount) +
                                           " feature columns, got " + std::to_string(raw.cols()));
  }
  FeatureMatrix out(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    for (int c = 0; c < kNodeFeatureCount; ++c) {
      const double v = c == kCumulativeTokens ? std::log1p(raw(r, c)) : raw(r, c);
      out(r, c) = (v - mean[c]) / stddev[c];
    }
  }
  return out;
}

FeatureMatrix NormalizationStats::invert(const FeatureMatrix& normalized) const {
  FeatureMatrix out(normalized.rows(), normalized.cols());
  for (Eigen::Index r = 0; r < normalized.rows(); ++r) {
    for (int c = 0; c < kNodeFeatureCount; ++c) {
      const double v = normalized(r, c) * stddev[c] + mean[c];
      out(r, c) = c == kCumulativeTokens ? std::expm1(v) : v;
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const NormalizationStats& s) {
  j = {{"mean", s.mean}, {"std", s.stddev}, {"log1p_columns", {static_cast<int>(kCumulativeTokens)}}};
}

void from_json(const nlohmann::json& j, NormalizationStats& s) {
  s.mean = j.at("mean").get<std::array<double, kNodeFeatureCount>>();
  s.stddev = j.at("std").get<std::array<double, kNodeFeatureCount>>();
}

std::pair<std::vector<GraphSample>, NormalizationStats> normalize(
    std::span<const GraphSample> samples, const std::optional<NormalizationStats>& stats) {
  const NormalizationStats used = stats ? *stats : NormalizationStats::fit(samples);
  std::vector<GraphSample> out(samples.begin(), samples.end());
  for (auto& g : out) g.node_features = used.apply(g.node_features);
  return {std::move(out), used};
}

}  // namespace thoughttree
