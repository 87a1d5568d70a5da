#include "thoughttree/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "thoughttree/error.hpp"

namespace thoughttree {

void to_json(nlohmann::json& j, const ExplainerConfig& c) {
  j = {{"steps", c.steps},
       {"learning_rate", c.learning_rate},
       {"size_weight", c.size_weight},
       {"entropy_weight", c.entropy_weight}};
}

void from_json(const nlohmann::json& j, ExplainerConfig& c) {
  const ExplainerConfig d;
  c.steps = j.value("steps", d.steps);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.size_weight = j.value("size_weight", d.size_weight);
  c.entropy_weight = j.value("entropy_weight", d.entropy_weight);
  if (c.steps < 0 || c.learning_rate <= 0) {
    throw Error(ErrorCode::ConfigError, "explainer needs steps >= 0 and a positive learning rate");
  }
}

EdgeImportance explain(const TreeClassifier& model, const GraphSample& raw, int target_class,
                       const ExplainerConfig& config,
                       std::vector<std::vector<double>>* trace) {
  if (!model.trained()) {
    throw Error(ErrorCode::NotTrained, "cannot explain with an untrained model");
  }
  if (target_class != 0 && target_class != 1) {
    throw Error(ErrorCode::ConfigError, "target class must be 0 or 1");
  }
  GraphSample g = raw;
  g.node_features = model.stats().apply(raw.node_features);

  const std::size_t n = g.num_tree_edges();
  std::vector<double> w(n, 0.0), mask(n), mask_grad(n);
  std::vector<double> m1(n, 0.0), m2(n, 0.0);
  auto refresh = [&] {
    for (std::size_t k = 0; k < n; ++k) mask[k] = sigmoid(w[k]);
  };
  refresh();
  if (trace) trace->push_back(mask);
  if (n == 0) return {};

  // loss = -log p(target) = softplus(-sign * z), d/dz = -sign * (1 - sigmoid(sign * z))
  const double sign = target_class == 1 ? 1.0 : -1.0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= config.steps; ++t) {
    std::fill(mask_grad.begin(), mask_grad.end(), 0.0);
    const double z = model.logit(g, mask);
    const double dz = -sign * (1.0 - sigmoid(sign * z));
    model.backward(g, dz, nullptr, mask, &mask_grad);

    const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    for (std::size_t k = 0; k < n; ++k) {
      const double m = mask[k];
      // d/dm of the mean binary entropy is log((1 - m) / m) / n
      const double dm = mask_grad[k] + config.size_weight +
                        config.entropy_weight * std::log((1.0 - m) / m) / static_cast<double>(n);
      const double dw = dm * m * (1.0 - m);
      m1[k] = b1 * m1[k] + (1 - b1) * dw;
      m2[k] = b2 * m2[k] + (1 - b2) * dw * dw;
      w[k] -= config.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
    }
    refresh();
    if (trace) trace->push_back(mask);
  }

  const auto [lo, hi] = std::minmax_element(mask.begin(), mask.end());
  EdgeImportance out;
  out.weights = mask;
  if (*hi - *lo > 1e-12) {
    const double low = *lo, range = *hi - *lo;
    for (double& v : out.weights) v = (v - low) / range;
  }
  return out;
}

std::vector<std::size_t> top_band(const EdgeImportance& importance, double fraction) {
  const auto& w = importance.weights;
  std::vector<std::size_t> order(w.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(w.size()) - 1e-9));
  order.resize(std::min(keep, order.size()));
  return order;
}

}  // namespace thoughttree
