#include "thoughttree/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "thoughttree/config.hpp"
#include "thoughttree/dataset.hpp"
#include "thoughttree/error.hpp"
#include "thoughttree/explainer.hpp"
#include "thoughttree/gnn_classifier.hpp"
#include "thoughttree/parallel.hpp"
#include "thoughttree/response_cache.hpp"
#include "thoughttree/selector.hpp"
#include "thoughttree/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace thoughttree {

double round_score(double score) { return std::round(score * 1e8) / 1e8; }

namespace {

struct Options {
  std::string config_path;
  std::size_t workers = 0;

  std::string profile;
  std::string in, out, cache, mode = "replay";
  std::string trees, graphs, model, tree, candidates, report;
  std::string split = "4:1";
  std::uint64_t seed = 0;
  int epochs = 0;
  int runs = 1;
  int target = -1;
  std::string strategy;
  std::size_t n = 10;
  std::string score_column;
};

struct Context {
  Options opt;
  AppConfig config;
  const CliHooks* hooks = nullptr;
  std::ostream* out = nullptr;

  std::size_t workers() const { return opt.workers ? opt.workers : config.workers; }
};

template <typename T>
T parse_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, where + ": " + e.what());
  }
}

SeparatorProfile resolve_profile(const Context& ctx) {
  if (ctx.opt.profile.empty()) return ctx.config.profile;
  if (ctx.opt.profile == "deepseek-family" || ctx.opt.profile == "extended") {
    return SeparatorProfile::builtin(ctx.opt.profile);
  }
  if (fs::is_regular_file(ctx.opt.profile)) return SeparatorProfile::load(ctx.opt.profile);
  throw Error(ErrorCode::ConfigError, "unknown separator profile '" + ctx.opt.profile +
                                          "' (use deepseek-family, extended, or a profile file)");
}

void print(const Context& ctx, const json& j) { *ctx.out << j.dump() << "\n"; }

TreeDocument load_document(const fs::path& path) {
  try {
    return document_from_json(read_json_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

TreeClassifier load_model(const Context& ctx) {
  auto model = TreeClassifier::load(ctx.opt.model);
  if (!model.trained()) throw Error(ErrorCode::NotTrained, ctx.opt.model + " holds an untrained model");
  return model;
}

std::vector<GraphSample> load_graphs(const fs::path& path) {
  const auto rows = read_jsonl(path);
  std::vector<GraphSample> out;
  out.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.push_back(parse_as<GraphSample>(rows[k], path.string() + ": record " + std::to_string(k + 1)));
  }
  return out;
}

// ---- stages -------------------------------------------------------------------

int cmd_segment(Context& ctx) {
  const auto profile = resolve_profile(ctx);
  const auto records = read_records(ctx.opt.in, ctx.config.labels);
  const auto rows = parallel_map(records.size(), ctx.workers(), [&](std::size_t i) {
    const auto& r = records[i];
    std::vector<Thought> thoughts;
    try {
      thoughts = split_thoughts(r.transcript, profile);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + r.sample_id + ": " + e.what());
    }
    json row = to_json(r);
    row["profile"] = profile.name();
    row["thoughts"] = thoughts;
    return row;
  });
  write_jsonl(ctx.opt.out, rows);
  std::size_t total = 0;
  for (const auto& row : rows) total += row["thoughts"].size();
  print(ctx, {{"records", rows.size()}, {"thoughts", total}, {"out", ctx.opt.out}});
  return 0;
}

int cmd_annotate(Context& ctx) {
  const auto mode = parse_cache_mode(ctx.opt.mode);
  const auto rows = read_jsonl(ctx.opt.in);
  std::optional<SeparatorProfile> profile;

  std::vector<DatasetRecord> records;
  std::vector<std::optional<std::vector<Thought>>> segmented;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::string where = ctx.opt.in + ": record " + std::to_string(k + 1);
    try {
      records.push_back(record_from_json(rows[k], ctx.config.labels));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    if (!seen.insert(records.back().sample_id).second) {
      throw Error(ErrorCode::ConfigError, where + ": duplicate sample id " + records.back().sample_id);
    }
    if (rows[k].contains("thoughts")) {
      segmented.push_back(parse_as<std::vector<Thought>>(rows[k]["thoughts"], where));
    } else {
      if (!profile) profile = resolve_profile(ctx);
      segmented.emplace_back();
    }
  }

  ResponseCache cache(ctx.opt.cache);
  std::unique_ptr<LlmClient> http;
  LlmClient* upstream = ctx.hooks->upstream;
  if (!upstream && mode != CacheMode::Replay) {
    http = std::make_unique<HttpChatClient>(ChatEndpoint::from_environment());
    upstream = http.get();
  }
  CachingClient client(cache, upstream, mode);

  parallel_map(records.size(), ctx.workers(), [&](std::size_t i) {
    const auto& r = records[i];
    AnnotatedChain chain;
    try {
      chain = segmented[i] ? annotate(r.transcript, *segmented[i], client, ctx.config.annotator)
                           : annotate(r.transcript, *profile, client, ctx.config.annotator);
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + r.sample_id + ": " + e.what());
    }
    chain.sample_id = r.sample_id;
    write_json_file(fs::path(ctx.opt.out) / (r.sample_id + ".json"),
                    {{"sample_id", r.sample_id},
                     {"label", r.label ? json(*r.label) : json(nullptr)},
                     {"metadata", r.metadata},
                     {"chain", chain}});
    return 0;
  });
  print(ctx, {{"records", records.size()},
              {"mode", to_string(mode)},
              {"cache_hits", client.hits()},
              {"upstream_calls", client.upstream_calls()},
              {"out", ctx.opt.out}});
  return 0;
}

int cmd_build_tree(Context& ctx) {
  const auto files = list_json_files(ctx.opt.in);
  const auto sizes = parallel_map(files.size(), ctx.workers(), [&](std::size_t i) {
    const auto j = read_json_file(files[i]);
    const std::string where = files[i].string();
    auto chain = parse_as<AnnotatedChain>(j.at("chain"), where);
    std::optional<int> label;
    if (j.contains("label")) label = parse_label(j["label"], ctx.config.labels);
    if (chain.sample_id.empty()) chain.sample_id = j.value("sample_id", files[i].stem().string());
    check_sample_id(chain.sample_id);
    TreeDocument doc;
    try {
      doc = make_document(chain, label, j.value("metadata", json::object()));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    write_json_file(fs::path(ctx.opt.out) / (doc.sample_id + ".json"), to_json(doc));
    return doc.tree.size();
  });
  std::size_t nodes = 0;
  for (auto s : sizes) nodes += s;
  print(ctx, {{"trees", files.size()}, {"nodes", nodes}, {"out", ctx.opt.out}});
  return 0;
}

int cmd_featurize(Context& ctx) {
  const auto files = list_json_files(ctx.opt.trees);
  const auto rows = parallel_map(files.size(), ctx.workers(), [&](std::size_t i) {
    return json(featurize(load_document(files[i])));
  });
  write_jsonl(ctx.opt.out, rows);
  print(ctx, {{"graphs", rows.size()}, {"out", ctx.opt.out}});
  return 0;
}

int cmd_train(Context& ctx) {
  const auto graphs = load_graphs(ctx.opt.graphs);
  std::vector<std::optional<int>> labels;
  for (const auto& g : graphs) labels.push_back(g.label);
  const auto split = stratified_split(labels, parse_ratio(ctx.opt.split), ctx.opt.seed);

  std::vector<GraphSample> train_set, test_set;
  for (auto i : split.train) train_set.push_back(graphs[i]);
  for (auto i : split.test) test_set.push_back(graphs[i]);

  ClassifierConfig cfg = ctx.config.classifier;
  cfg.seed = ctx.opt.seed;
  if (ctx.opt.epochs > 0) cfg.max_epochs = ctx.opt.epochs;
  auto result = train(train_set, cfg);

  std::vector<LengthExample> lengths;
  for (const auto& g : train_set) lengths.push_back({static_cast<double>(g.token_length), *g.label});
  const auto baseline = train_length_baseline(lengths);
  std::size_t baseline_hits = 0;
  for (const auto& g : test_set) {
    baseline_hits += static_cast<int>(classify(baseline_score(baseline, static_cast<double>(g.token_length)))) == *g.label;
  }

  const double test_acc = test_set.empty() ? 0.0 : accuracy(result.model, test_set);
  // Extra runs reuse the split and only change the training seed; the
  // checkpoint always comes from the first run.
  std::vector<double> run_accs{test_acc};
  for (int r = 1; r < ctx.opt.runs; ++r) {
    ClassifierConfig again = cfg;
    again.seed = ctx.opt.seed + static_cast<std::uint64_t>(r);
    const auto extra = train(train_set, again);
    run_accs.push_back(test_set.empty() ? 0.0 : accuracy(extra.model, test_set));
  }
  const double baseline_acc = test_set.empty() ? 0.0 : static_cast<double>(baseline_hits) / test_set.size();
  json report = {{"samples", graphs.size()},
                 {"split", ctx.opt.split},
                 {"seed", ctx.opt.seed},
                 {"train_size", train_set.size()},
                 {"fit_size", result.train_size},
                 {"validation_size", result.validation_size},
                 {"test_size", test_set.size()},
                 {"epochs", result.log.size()},
                 {"best_epoch", result.best_epoch},
                 {"validation_accuracy", result.best_validation_accuracy},
                 {"test_accuracy", test_acc},
                 {"length_baseline_test_accuracy", baseline_acc}};
  if (ctx.opt.runs > 1) {
    double mean = 0, var = 0;
    for (double a : run_accs) mean += a / run_accs.size();
    for (double a : run_accs) var += (a - mean) * (a - mean) / run_accs.size();
    report["runs"] = run_accs;
    report["mean_test_accuracy"] = mean;
    report["test_accuracy_std"] = std::sqrt(var);
  }
  result.model.training_summary["split"] = ctx.opt.split;
  result.model.training_summary["test_size"] = test_set.size();
  result.model.training_summary["test_accuracy"] = test_acc;
  result.model.training_summary["length_baseline"] = baseline;
  result.model.save(ctx.opt.out);
  if (!ctx.opt.report.empty()) write_json_file(ctx.opt.report, report);
  print(ctx, report);
  return 0;
}

int cmd_eval(Context& ctx) {
  const auto model = load_model(ctx);
  const auto graphs = load_graphs(ctx.opt.graphs);
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  const auto verdicts = parallel_map(graphs.size(), ctx.workers(), [&](std::size_t i) {
    return static_cast<int>(classify(model, graphs[i]));
  });
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (!graphs[i].label) continue;
    const bool positive = *graphs[i].label == 1;
    if (verdicts[i] == 1) {
      (positive ? tp : fp)++;
    } else {
      (positive ? fn : tn)++;
    }
  }
  const std::size_t labeled = tp + tn + fp + fn;
  if (labeled == 0) throw Error(ErrorCode::EmptyInput, ctx.opt.graphs + " has no labeled samples");
  print(ctx, {{"samples", labeled},
              {"accuracy", static_cast<double>(tp + tn) / labeled},
              {"true_positive", tp},
              {"true_negative", tn},
              {"false_positive", fp},
              {"false_negative", fn}});
  return 0;
}

json prediction(const TreeClassifier& model, const TreeDocument& doc) {
  const double score = predict_score(model, featurize(doc));
  return {{"sample_id", doc.sample_id},
          {"score", round_score(score)},
          {"verdict", classify(score) == Verdict::Positive ? "positive" : "negative"}};
}

int cmd_predict(Context& ctx) {
  if (ctx.opt.tree.empty() && ctx.opt.trees.empty()) {
    throw Error(ErrorCode::ConfigError, "predict needs --tree or --trees");
  }
  const auto model = load_model(ctx);
  if (!ctx.opt.tree.empty()) {
    print(ctx, prediction(model, load_document(ctx.opt.tree)));
    return 0;
  }
  const auto files = list_json_files(ctx.opt.trees);
  const auto rows = parallel_map(files.size(), ctx.workers(),
                                 [&](std::size_t i) { return prediction(model, load_document(files[i])); });
  if (ctx.opt.out.empty()) {
    for (const auto& r : rows) print(ctx, r);
  } else {
    write_jsonl(ctx.opt.out, rows);
    print(ctx, {{"predictions", rows.size()}, {"out", ctx.opt.out}});
  }
  return 0;
}

int cmd_explain(Context& ctx) {
  const auto model = load_model(ctx);
  auto doc = load_document(ctx.opt.tree);
  const auto graph = featurize(doc);
  const double score = predict_score(model, graph);
  const int target = ctx.opt.target >= 0 ? ctx.opt.target : static_cast<int>(classify(score));
  const auto importance = explain(model, graph, target, ctx.config.explainer);
  doc.importance = importance.weights;
  write_json_file(ctx.opt.out, to_json(doc));
  print(ctx, {{"sample_id", doc.sample_id},
              {"score", round_score(score)},
              {"target_class", target},
              {"top_edges", top_band(importance)},
              {"out", ctx.opt.out}});
  return 0;
}

int cmd_detect_patterns(Context& ctx) {
  const auto files = list_json_files(ctx.opt.trees);
  const auto found = parallel_map(files.size(), ctx.workers(), [&](std::size_t i) {
    const auto doc = load_document(files[i]);
    return json{{"sample_id", doc.sample_id}, {"detections", detect_patterns(doc.tree, ctx.config.thresholds)}};
  });
  json counts = json::object(), frequency = json::object();
  for (auto p : kAllPatterns) {
    std::size_t hit = 0;
    for (const auto& f : found) {
      for (const auto& d : f["detections"]) {
        if (d["pattern"] == to_string(p)) {
          ++hit;
          break;
        }
      }
    }
    counts[to_string(p)] = hit;
    frequency[to_string(p)] = files.empty() ? 0.0 : static_cast<double>(hit) / files.size();
  }
  json report = {{"trees", files.size()},
                 {"thresholds", ctx.config.thresholds},
                 {"counts", counts},
                 {"frequency", frequency},
                 {"samples", found}};
  write_json_file(ctx.opt.report, report);
  print(ctx, {{"trees", files.size()}, {"frequency", frequency}, {"report", ctx.opt.report}});
  return 0;
}

int cmd_bestofn(Context& ctx) {
  const auto strategy = parse_strategy(ctx.opt.strategy);
  const auto rows = read_jsonl(ctx.opt.candidates);
  std::vector<Candidate> candidates;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    try {
      candidates.push_back(candidate_from_json(rows[k]));
    } catch (const Error& e) {
      throw Error(e.code(), ctx.opt.candidates + ": record " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  auto questions = group_by_question(candidates, ctx.opt.n);

  if (needs_scores(strategy)) {
    if (!ctx.opt.score_column.empty()) {
      for (auto& q : questions) use_external_scores(q.candidates, ctx.opt.score_column);
    } else {
      if (ctx.opt.model.empty()) {
        throw Error(ErrorCode::ConfigError, std::string(to_string(strategy)) + " needs --model or --score-column");
      }
      const auto model = load_model(ctx);
      const fs::path base = fs::path(ctx.opt.candidates).parent_path();
      std::vector<Candidate*> flat;
      for (auto& q : questions) {
        for (auto& c : q.candidates) flat.push_back(&c);
      }
      const auto scores = parallel_map(flat.size(), ctx.workers(), [&](std::size_t i) {
        const auto& ref = flat[i]->transcript_ref;
        if (ref.empty()) {
          throw Error(ErrorCode::ConfigError, "candidate " + std::to_string(flat[i]->candidate_id) + " of question " +
                                                  flat[i]->question_id + " has no transcript_ref");
        }
        const fs::path path = fs::path(ref).is_absolute() ? fs::path(ref) : base / ref;
        return round_score(predict_score(model, featurize(load_document(path))));
      });
      for (std::size_t i = 0; i < flat.size(); ++i) flat[i]->score = scores[i];
    }
  }

  json selections = json::array();
  std::size_t judged = 0, correct = 0;
  for (const auto& q : questions) {
    const auto s = select(q, strategy);
    if (s.correct) {
      ++judged;
      correct += *s.correct;
    }
    selections.push_back(to_json(s));
  }
  json report = {{"strategy", to_string(strategy)},
                 {"n", ctx.opt.n},
                 {"questions", questions.size()},
                 {"selections", selections}};
  report["accuracy"] = judged ? json(static_cast<double>(correct) / judged) : json(nullptr);
  if (!ctx.opt.out.empty()) write_json_file(ctx.opt.out, report);
  print(ctx, report);
  return 0;
}

int cmd_viz(Context& ctx) {
  const auto doc = load_document(ctx.opt.tree);
  const auto ext = fs::path(ctx.opt.out).extension().string();
  if (ext == ".dot" || ext == ".gv") {
    write_text_file(ctx.opt.out, export_dot(doc));
  } else if (ext == ".html" || ext == ".htm") {
    write_text_file(ctx.opt.out, export_html(doc));
  } else {
    throw Error(ErrorCode::ConfigError, "viz output must end in .dot, .gv, .html or .htm");
  }
  print(ctx, {{"sample_id", doc.sample_id}, {"nodes", doc.tree.size()}, {"out", ctx.opt.out}});
  return 0;
}

void report_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const CliHooks& hooks) {
  Context ctx;
  ctx.hooks = &hooks;
  ctx.out = &out;
  auto& o = ctx.opt;

  CLI::App app{"Reasoning-tree toolkit: segment, annotate, build, classify and explain reasoning transcripts.",
               "thoughttree"};
  app.require_subcommand(1);
  app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--workers", o.workers, "Parallel workers (overrides the config)");

  auto* segment = app.add_subcommand("segment", "Split transcripts into thoughts");
  segment->add_option("--profile", o.profile, "Separator profile: deepseek-family, extended, or a JSON file");
  segment->add_option("--in", o.in, "Records (JSONL)")->required();
  segment->add_option("--out", o.out, "Segmented records (JSONL)")->required();

  auto* annotate_cmd = app.add_subcommand("annotate", "Extract sketches, step assignments and thought functions");
  annotate_cmd->add_option("--cache", o.cache, "Response cache directory")->required();
  annotate_cmd->add_option("--mode", o.mode, "Cache mode")
      ->check(CLI::IsMember({"record", "replay", "passthrough"}))
      ->capture_default_str();
  annotate_cmd->add_option("--in", o.in, "Segmented or raw records (JSONL)")->required();
  annotate_cmd->add_option("--out", o.out, "Directory for annotated chains")->required();
  annotate_cmd->add_option("--profile", o.profile, "Separator profile for records without thoughts");

  auto* build = app.add_subcommand("build-tree", "Assemble annotated chains into reasoning trees");
  build->add_option("--in", o.in, "Directory of annotated chains")->required();
  build->add_option("--out", o.out, "Directory for tree documents")->required();

  auto* feat = app.add_subcommand("featurize", "Turn tree documents into classifier graphs");
  feat->add_option("--trees", o.trees, "Directory of tree documents")->required();
  feat->add_option("--out", o.out, "Graphs (JSONL)")->required();

  auto* train_cmd = app.add_subcommand("train", "Train the tree classifier");
  train_cmd->add_option("--graphs", o.graphs, "Labeled graphs (JSONL)")->required();
  train_cmd->add_option("--split", o.split, "Train:test ratio")->capture_default_str();
  train_cmd->add_option("--seed", o.seed, "Seed for the split, initialization and shuffling")->capture_default_str();
  train_cmd->add_option("--out", o.out, "Checkpoint path")->required();
  train_cmd->add_option("--epochs", o.epochs, "Override the epoch budget");
  train_cmd->add_option("--report", o.report, "Also write the report to this file");
  train_cmd->add_option("--runs", o.runs, "Average test accuracy over this many training seeds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Accuracy of a checkpoint on labeled graphs");
  eval_cmd->add_option("--graphs", o.graphs, "Labeled graphs (JSONL)")->required();
  eval_cmd->add_option("--model", o.model, "Checkpoint")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Score tree documents");
  predict_cmd->add_option("--model", o.model, "Checkpoint")->required();
  auto* one = predict_cmd->add_option("--tree", o.tree, "Tree document");
  auto* many = predict_cmd->add_option("--trees", o.trees, "Directory of tree documents");
  predict_cmd->add_option("--out", o.out, "Predictions (JSONL) when scoring a directory");
  one->excludes(many);

  auto* explain_cmd = app.add_subcommand("explain", "Edge importances for one tree");
  explain_cmd->add_option("--model", o.model, "Checkpoint")->required();
  explain_cmd->add_option("--tree", o.tree, "Tree document")->required();
  explain_cmd->add_option("--out", o.out, "Tree document with importances")->required();
  explain_cmd->add_option("--target", o.target, "Class to explain (default: the predicted one)")
      ->check(CLI::Range(0, 1));

  auto* detect = app.add_subcommand("detect-patterns", "Structural error-pattern frequencies");
  detect->add_option("--trees", o.trees, "Directory of tree documents")->required();
  detect->add_option("--report", o.report, "Report (JSON)")->required();

  auto* bon = app.add_subcommand("bestofn", "Best-of-N selection over candidate responses");
  bon->add_option("--strategy", o.strategy, "Selection strategy")
      ->required()
      ->check(CLI::IsMember({"ours-best", "ours-vote", "length-best", "vote"}));
  bon->add_option("--model", o.model, "Checkpoint used to score candidates");
  bon->add_option("--candidates", o.candidates, "Candidates (JSONL)")->required();
  bon->add_option("--n", o.n, "Candidates considered per question")->capture_default_str();
  bon->add_option("--score-column", o.score_column, "Use this external score instead of the model");
  bon->add_option("--out", o.out, "Also write the report to this file");

  auto* viz = app.add_subcommand("viz", "Draw a tree as Graphviz DOT or standalone HTML");
  viz->add_option("--tree", o.tree, "Tree document")->required();
  viz->add_option("--out", o.out, "Output path ending in .dot or .html")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "UsageError", e.what());
    return 2;
  }

  try {
    if (!o.config_path.empty()) ctx.config = AppConfig::load(o.config_path);
    if (*segment) return cmd_segment(ctx);
    if (*annotate_cmd) return cmd_annotate(ctx);
    if (*build) return cmd_build_tree(ctx);
    if (*feat) return cmd_featurize(ctx);
    if (*train_cmd) return cmd_train(ctx);
    if (*eval_cmd) return cmd_eval(ctx);
    if (*predict_cmd) return cmd_predict(ctx);
    if (*explain_cmd) return cmd_explain(ctx);
    if (*detect) return cmd_detect_patterns(ctx);
    if (*bon) return cmd_bestofn(ctx);
    if (*viz) return cmd_viz(ctx);
  } catch (const Error& e) {
    report_error(err, to_string(e.code()), e.what());
    return 1;
  } catch (const json::exception& e) {
    report_error(err, "ParseError", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error(err, "InternalError", e.what());
    return 1;
  }
  return 0;
}

}  // namespace thoughttree
