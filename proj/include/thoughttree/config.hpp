#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "thoughttree/annotator.hpp"
#include "thoughttree/dataset.hpp"
#include "thoughttree/explainer.hpp"
#include "thoughttree/gnn_classifier.hpp"
#include "thoughttree/segmenter.hpp"

namespace thoughttree {

// Settings shared by the command-line stages. Every key is optional:
//   {"profile": "deepseek-family" | {"name": ..., "separators": [...]},
//    "annotator": {...}, "classifier": {...}, "explainer": {...},
//    "patterns": {...}, "labels": {...}, "workers": 4}
struct AppConfig {
  SeparatorProfile profile = SeparatorProfile::deepseek_family();
  AnnotatorConfig annotator;
  ClassifierConfig classifier;
  ExplainerConfig explainer;
  PatternThresholds thresholds;
  LabelSet labels;
  std::size_t workers = 4;

  static AppConfig from_json(const nlohmann::json& j);
  static AppConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

}  // namespace thoughttree
