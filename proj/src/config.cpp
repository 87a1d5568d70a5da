#include "thoughttree/config.hpp"

#include "thoughttree/error.hpp"

namespace thoughttree {

AppConfig AppConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  AppConfig c;
  try {
    if (j.contains("profile")) {
      const auto& p = j["profile"];
      c.profile = p.is_string() ? SeparatorProfile::builtin(p.get<std::string>()) : SeparatorProfile::from_json(p);
    }
    if (j.contains("annotator")) {
      const auto& a = j["annotator"];
      c.annotator.model_name = a.value("model", c.annotator.model_name);
      c.annotator.temperature = a.value("temperature", c.annotator.temperature);
      c.annotator.word_budget = a.value("word_budget", c.annotator.word_budget);
      c.annotator.max_in_flight = a.value("max_in_flight", c.annotator.max_in_flight);
      if (c.annotator.word_budget == 0 || c.annotator.max_in_flight == 0) {
        throw Error(ErrorCode::ConfigError, "annotator word_budget and max_in_flight must be positive");
      }
    }
    if (j.contains("classifier")) c.classifier = j["classifier"].get<ClassifierConfig>();
    if (j.contains("explainer")) c.explainer = j["explainer"].get<ExplainerConfig>();
    if (j.contains("patterns")) c.thresholds = j["patterns"].get<PatternThresholds>();
    if (j.contains("labels")) c.labels = j["labels"].get<LabelSet>();
    c.workers = j.value("workers", c.workers);
    if (c.workers == 0) throw Error(ErrorCode::ConfigError, "workers must be positive");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid config: ") + e.what());
  }
  c.classifier.validate();
  return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(read_json_file(path));
  } catch (const Error& e) {
    throw Error(e.code() == ErrorCode::ParseError ? ErrorCode::ConfigError : e.code(), e.what());
  }
}

nlohmann::json AppConfig::to_json() const {
  return {{"profile", profile.to_json()},
          {"annotator",
           {{"model", annotator.model_name},
            {"temperature", annotator.temperature},
            {"word_budget", annotator.word_budget},
            {"max_in_flight", annotator.max_in_flight}}},
          {"classifier", classifier},
          {"explainer", explainer},
          {"patterns", thresholds},
          {"labels", labels},
          {"workers", workers}};
}

}  // namespace thoughttree
