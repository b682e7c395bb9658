// motionhmm_cli: batch front end for the motion classification library.
//
// Subcommands wrap the library modules one to one (dataset, synth, train,
// classify, eval, select-features, grid-search). Every artifact the tool
// writes starts with '#' comment lines recording the command and seed, and
// re-running any command with the same inputs and seed reproduces the
// artifact byte for byte regardless of --threads.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "motionhmm/classifiers.hpp"
#include "motionhmm/dataset.hpp"
#include "motionhmm/errors.hpp"
#include "motionhmm/evaluation.hpp"
#include "motionhmm/features.hpp"
#include "motionhmm/rng.hpp"
#include "motionhmm/selection.hpp"
#include "motionhmm/synth.hpp"
#include "motionhmm/systems.hpp"
#include "motionhmm/text.hpp"

namespace fs = std::filesystem;
using namespace motionhmm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;

// ---------------------------------------------------------------------------
// shared option bundles
// ---------------------------------------------------------------------------

struct FeatureOptions {
  std::string features = "root_pos";
  bool no_normalize = false;
  bool smooth = false;
  std::size_t window = 4;
  bool no_scale = false;

  FeatureSpec spec() const {
    FeatureSpec fs;
    std::stringstream in(features);
    std::string name;
    while (std::getline(in, name, ','))
      if (!name.empty()) fs.features.push_back(name);
    if (fs.features.empty())
      throw validation_error("--features needs at least one feature name");
    fs.normalized = !no_normalize;
    fs.smoothed = smooth;
    fs.window = window;
    fs.scaled = !no_scale;
    return fs;
  }
};

struct ModelOptions {
  std::string model = "hmm";
  std::size_t states = 5;
  std::string topology = "left_to_right";
  int delta = 1;
  std::size_t chains = 2;
  bool chains_given = false;
  std::string init = "uniform";
  unsigned iterations = 10;

  ModelConfig config() const {
    ModelConfig mc;
    if (model == "hmm")
      mc.kind = SequenceModelKind::kHmm;
    else if (model == "fhmm")
      mc.kind = SequenceModelKind::kFhmm;
    else
      throw validation_error("--model must be hmm or fhmm");
    if (chains_given && mc.kind == SequenceModelKind::kHmm)
      throw validation_error("--chains only applies to --model fhmm");
    mc.num_states = states;
    mc.num_chains = chains;
    if (topology == "left_to_right") {
      mc.topology.kind = TopologyKind::kLeftToRight;
      if (delta > 0)
        mc.topology.max_skip = static_cast<unsigned>(delta);
      else
        mc.topology.max_skip.reset();
    } else if (topology == "ergodic") {
      mc.topology.kind = TopologyKind::kErgodic;
      mc.topology.max_skip.reset();
    } else {
      throw validation_error("--topology must be left_to_right or ergodic");
    }
    if (init == "uniform")
      mc.transition_init = InitMode::kUniform;
    else if (init == "random")
      mc.transition_init = InitMode::kRandom;
    else
      throw validation_error("--init must be uniform or random");
    mc.iterations = iterations;
    return mc;
  }
};

struct DecisionOptions {
  std::string decision = "linear";
  double threshold = 0.0;
  std::string loss = "logistic";
  std::string penalty = "l1";
  double c_value = 1e-3;

  DecisionConfig config() const {
    DecisionConfig dc;
    if (decision == "max")
      dc.kind = DecisionKind::kMax;
    else if (decision == "threshold")
      dc.kind = DecisionKind::kThreshold;
    else if (decision == "linear")
      dc.kind = DecisionKind::kLinear;
    else if (decision == "tree")
      dc.kind = DecisionKind::kTree;
    else if (decision == "forest")
      dc.kind = DecisionKind::kForest;
    else
      throw validation_error("--decision must be max, threshold, linear, tree or forest");
    dc.threshold = threshold;
    if (loss == "logistic")
      dc.linear.loss = LinearLoss::kLogistic;
    else if (loss == "squared_hinge")
      dc.linear.loss = LinearLoss::kSquaredHinge;
    else
      throw validation_error("--loss must be logistic or squared_hinge");
    if (penalty == "l1")
      dc.linear.penalty = Penalty::kL1;
    else if (penalty == "l2")
      dc.linear.penalty = Penalty::kL2;
    else
      throw validation_error("--penalty must be l1 or l2");
    dc.linear.C = c_value;
    return dc;
  }
};

std::vector<std::size_t> every_index(const Dataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

// '#'-prefixed artifact header. Deliberately excludes the thread count so
// artifacts stay byte-identical across parallelism degrees.
std::string artifact_header(const std::string& command, std::uint64_t seed,
                            const std::vector<std::pair<std::string, std::string>>&
                                params = {}) {
  std::ostringstream out;
  out << "# motionhmm " << command << '\n';
  out << "# seed=" << seed;
  for (const auto& [key, value] : params) out << ' ' << key << '=' << value;
  out << '\n';
  return out.str();
}

std::string label_names_of(const LabelVector& bits,
                           const std::vector<std::string>& vocabulary) {
  std::string text;
  for (std::size_t l = 0; l < bits.size(); ++l) {
    if (!bits[l]) continue;
    if (!text.empty()) text += ' ';
    text += vocabulary[l];
  }
  return text.empty() ? "(none)" : text;
}

// ---------------------------------------------------------------------------
// dataset subcommands
// ---------------------------------------------------------------------------

int run_dataset_validate(const std::string& data) {
  Dataset ds = load_dataset(data);
  std::cout << "ok: " << ds.size() << " samples, " << ds.vocabulary.size()
            << " labels\n";
  return kExitOk;
}

int run_dataset_report(const std::string& data, const std::string& csv_path,
                       std::uint64_t seed) {
  Dataset ds = load_dataset(data);
  DatasetReport report = make_report(ds);
  std::cout << report_text(report);
  if (!csv_path.empty())
    write_text_file(csv_path, artifact_header("dataset report", seed,
                                              {{"data", data}}) +
                                  report_csv(report));
  return kExitOk;
}

int run_dataset_export(const std::string& data, const std::string& out) {
  Dataset ds = load_dataset(data);
  write_text_file(out, export_archive(ds));
  std::cout << "wrote " << out << " (" << ds.size() << " samples)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int run_synth(const std::string& spec_path, const std::string& out_dir) {
  SynthSpec spec = synth_spec_from_json(read_text_file(spec_path));
  Dataset ds = synth_dataset(spec);

  fs::create_directories(fs::path(out_dir) / "motions");
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& sample : ds.samples) {
    std::string relative = "motions/" + sample.id + ".csv";
    write_text_file((fs::path(out_dir) / relative).string(),
                    motion_to_csv(sample.record));
    nlohmann::json entry;
    entry["id"] = sample.id;
    entry["labels"] = sample.label_names;
    entry["file"] = relative;
    manifest.push_back(std::move(entry));
  }
  write_text_file((fs::path(out_dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");
  std::cout << "wrote " << ds.size() << " motions to " << out_dir << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train / classify
// ---------------------------------------------------------------------------

int run_train(const std::string& system, const std::string& data,
              const FeatureOptions& fopts, const ModelOptions& mopts,
              const DecisionOptions& dopts, std::uint64_t seed, unsigned threads,
              const std::string& out_dir) {
  Dataset ds = load_dataset(data);
  FeatureSpec spec = fopts.spec();
  ModelConfig model = mopts.config();

  SystemBundle bundle;
  if (system == "powerset") {
    bundle = train_powerset(ds, every_index(ds), spec, model, seed, threads);
  } else {
    bundle = train_multilabel(ds, every_index(ds), spec, model, dopts.config(),
                              seed, threads);
  }
  save_bundle(bundle, out_dir);
  std::cout << "trained " << bundle.models.size() << " models ("
            << (system == "powerset" ? "label combinations" : "labels")
            << ") -> " << out_dir << '\n';
  for (const auto& name : bundle.sparse_classes)
    std::cout << "note: class '" << name << "' had at most one training sequence\n";
  return kExitOk;
}

int run_classify(const std::string& bundle_dir, const std::string& motion_path,
                 bool as_json) {
  SystemBundle bundle = load_bundle(bundle_dir);
  MotionRecord record =
      parse_motion_csv(read_text_file(motion_path), motion_path);
  Classification result = classify(bundle, record);

  if (as_json) {
    nlohmann::json doc;
    std::vector<std::string> names;
    for (std::size_t l = 0; l < result.labels.size(); ++l)
      if (result.labels[l]) names.push_back(bundle.vocabulary[l]);
    doc["labels"] = names;
    nlohmann::json scores;
    for (std::size_t m = 0; m < bundle.model_names.size(); ++m)
      scores[bundle.model_names[m]] = result.log_likelihoods[m];
    doc["log_likelihoods"] = std::move(scores);
    std::cout << doc.dump(2) << '\n';
  } else {
    std::cout << label_names_of(result.labels, bundle.vocabulary) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval kfold
// ---------------------------------------------------------------------------

int run_eval_kfold(const std::string& system, const std::string& data,
                   const FeatureOptions& fopts, const ModelOptions& mopts,
                   const DecisionOptions& dopts, std::size_t k, std::uint64_t seed,
                   unsigned threads, const std::string& csv_path) {
  Dataset ds = load_dataset(data);
  FeatureSpec spec = fopts.spec();
  ModelConfig model = mopts.config();

  std::vector<std::size_t> folds = stratified_kfold(ds.labels, k, seed);
  std::vector<LabelVector> truth(ds.size()), predicted(ds.size());
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < ds.size(); ++i)
      (folds[i] == f ? test : train).push_back(i);

    std::uint64_t fold_seed = derive_seed(seed, "fold", f);
    SystemBundle bundle;
    if (system == "powerset")
      bundle = train_powerset(ds, train, spec, model, fold_seed, threads);
    else
      bundle = train_multilabel(ds, train, spec, model, dopts.config(), fold_seed,
                                threads);
    for (std::size_t i : test) {
      truth[i] = ds.labels[i];
      predicted[i] = classify(bundle, ds.samples[i].record).labels;
    }
  }

  auto per_label = per_label_metrics(truth, predicted);
  LabelMetrics macro = macro_average(per_label);
  double total = total_accuracy(truth, predicted);

  std::ostringstream csv;
  csv << "label,accuracy,precision,recall,f1\n";
  for (std::size_t l = 0; l < per_label.size(); ++l)
    csv << ds.vocabulary[l] << ',' << format_double(per_label[l].accuracy) << ','
        << format_double(per_label[l].precision) << ','
        << format_double(per_label[l].recall) << ','
        << format_double(per_label[l].f1) << '\n';
  csv << "macro," << format_double(macro.accuracy) << ','
      << format_double(macro.precision) << ',' << format_double(macro.recall) << ','
      << format_double(macro.f1) << '\n';
  csv << "total_accuracy," << format_double(total) << ",,,\n";

  std::cout << "k-fold (" << system << ", k=" << k << ") over " << ds.size()
            << " samples\n";
  for (std::size_t l = 0; l < per_label.size(); ++l)
    std::cout << "  " << ds.vocabulary[l] << ": acc "
              << format_double(per_label[l].accuracy) << ", f1 "
              << format_double(per_label[l].f1) << '\n';
  std::cout << "  macro f1: " << format_double(macro.f1) << '\n';
  std::cout << "  total accuracy: " << format_double(total) << '\n';

  if (!csv_path.empty())
    write_text_file(csv_path,
                    artifact_header("eval kfold", seed,
                                    {{"system", system},
                                     {"k", std::to_string(k)},
                                     {"data", data}}) +
                        csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// select-features
// ---------------------------------------------------------------------------

int run_select_features(const std::string& data, const std::string& candidates,
                        const FeatureOptions& fopts, const ModelOptions& mopts,
                        std::size_t folds, std::size_t min_features,
                        std::uint64_t seed, unsigned threads,
                        const std::string& csv_path) {
  Dataset ds = load_dataset(data);

  std::vector<std::string> names;
  std::stringstream in(candidates);
  std::string name;
  while (std::getline(in, name, ','))
    if (!name.empty()) names.push_back(name);

  SelectionConfig cfg;
  cfg.folds = folds;
  cfg.model = mopts.config();
  cfg.normalized = !fopts.no_normalize;
  cfg.smoothed = fopts.smooth;
  cfg.window = fopts.window;
  cfg.scaled = !fopts.no_scale;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.min_features = min_features;

  auto trace = backward_eliminate(ds, names, cfg);
  std::cout << elimination_trace_text(trace);
  if (!csv_path.empty())
    write_text_file(csv_path,
                    artifact_header("select-features", seed,
                                    {{"candidates", candidates},
                                     {"folds", std::to_string(folds)},
                                     {"data", data}}) +
                        elimination_trace_csv(trace));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// grid-search
// ---------------------------------------------------------------------------

// Applies one grid point to the run configuration. Supported axis names are
// the tunables the sweep makes sense over; anything else is a usage error.
void apply_grid_point(const GridPoint& point, FeatureOptions& fopts,
                      ModelOptions& mopts, DecisionOptions& dopts) {
  for (const auto& [key, value] : point) {
    if (key == "states")
      mopts.states = std::stoul(value);
    else if (key == "delta")
      mopts.delta = std::stoi(value);
    else if (key == "topology")
      mopts.topology = value;
    else if (key == "iterations")
      mopts.iterations = static_cast<unsigned>(std::stoul(value));
    else if (key == "model")
      mopts.model = value;
    else if (key == "chains") {
      mopts.chains = std::stoul(value);
      mopts.chains_given = false;  // grid-driven, not a usage conflict
    } else if (key == "init")
      mopts.init = value;
    else if (key == "decision")
      dopts.decision = value;
    else if (key == "loss")
      dopts.loss = value;
    else if (key == "penalty")
      dopts.penalty = value;
    else if (key == "C")
      dopts.c_value = std::stod(value);
    else if (key == "features")
      fopts.features = value;
    else
      throw validation_error("unknown grid axis '" + key + "'");
  }
}

int run_grid_search(const std::string& system, const std::string& data,
                    const std::string& grid_path, const FeatureOptions& fopts,
                    const ModelOptions& mopts, const DecisionOptions& dopts,
                    std::size_t k, std::uint64_t seed, unsigned threads,
                    const std::string& csv_path) {
  Dataset ds = load_dataset(data);

  nlohmann::json grid_doc;
  try {
    grid_doc = nlohmann::json::parse(read_text_file(grid_path));
  } catch (const nlohmann::json::exception& e) {
    throw validation_error(grid_path + ": not valid JSON (" + e.what() + ")");
  }
  std::vector<GridAxis> axes;
  for (const auto& axis : grid_doc.at("axes")) {
    GridAxis ga;
    ga.name = axis.at("name").get<std::string>();
    for (const auto& v : axis.at("values")) {
      if (v.is_string())
        ga.values.push_back(v.get<std::string>());
      else
        ga.values.push_back(v.dump());
    }
    axes.push_back(std::move(ga));
  }

  // One grid point = one k-fold run scored by total accuracy. Thread-level
  // parallelism lives inside the folds; the sweep itself stays serial so a
  // failure in one point cannot starve another.
  auto scorer = [&](const GridPoint& point) -> double {
    FeatureOptions f = fopts;
    ModelOptions m = mopts;
    DecisionOptions d = dopts;
    apply_grid_point(point, f, m, d);
    FeatureSpec spec = f.spec();
    ModelConfig model = m.config();

    std::vector<std::size_t> folds = stratified_kfold(ds.labels, k, seed);
    std::vector<LabelVector> truth(ds.size()), predicted(ds.size());
    for (std::size_t fold = 0; fold < k; ++fold) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < ds.size(); ++i)
        (folds[i] == fold ? test : train).push_back(i);
      std::uint64_t fold_seed = derive_seed(seed, "fold", fold);
      SystemBundle bundle;
      if (system == "powerset")
        bundle = train_powerset(ds, train, spec, model, fold_seed, threads);
      else
        bundle = train_multilabel(ds, train, spec, model, d.config(), fold_seed,
                                  threads);
      for (std::size_t i : test) {
        truth[i] = ds.labels[i];
        predicted[i] = classify(bundle, ds.samples[i].record).labels;
      }
    }
    return total_accuracy(truth, predicted);
  };

  auto results = grid_search(axes, scorer, 1);

  std::cout << "grid search (" << system << ") over " << results.size()
            << " points\n";
  for (std::size_t i = 0; i < results.size() && i < 5; ++i) {
    std::cout << "  #" << i + 1 << " score "
              << (std::isnan(results[i].score) ? "NaN"
                                               : format_double(results[i].score));
    for (const auto& [key, value] : results[i].params)
      std::cout << ' ' << key << '=' << value;
    std::cout << '\n';
  }

  if (!csv_path.empty())
    write_text_file(csv_path,
                    artifact_header("grid-search", seed,
                                    {{"system", system},
                                     {"k", std::to_string(k)},
                                     {"grid", grid_path},
                                     {"data", data}}) +
                        grid_results_csv(results));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-emission HMM / factorial HMM toolkit for multi-label "
               "motion classification"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --seed / --threads follow the subcommand name

  std::uint64_t seed = 0;
  unsigned threads = 0;
  app.add_option("--seed", seed, "Root seed for all randomized steps");
  app.add_option("--threads", threads,
                 "Worker threads (0 = MOTIONHMM_THREADS or hardware)");

  std::string data, out_path, csv_path, bundle_dir, motion_path, spec_path;
  std::string grid_path, candidates, system_kind = "powerset";
  bool as_json = false;
  std::size_t k = 3, folds = 3, min_features = 1;
  FeatureOptions fopts;
  ModelOptions mopts;
  DecisionOptions dopts;

  auto add_feature_options = [&](CLI::App* cmd) {
    cmd->add_option("--features", fopts.features,
                    "Comma-separated feature names");
    cmd->add_flag("--no-normalize", fopts.no_normalize,
                  "Skip root-frame normalization");
    cmd->add_flag("--smooth", fopts.smooth, "Apply moving-average smoothing");
    cmd->add_option("--window", fopts.window, "Smoothing window parameter");
    cmd->add_flag("--no-scale", fopts.no_scale, "Skip min-max scaling");
  };
  auto add_model_options = [&](CLI::App* cmd) {
    cmd->add_option("--model", mopts.model, "hmm or fhmm");
    cmd->add_option("--states", mopts.states, "States per chain");
    cmd->add_option("--topology", mopts.topology, "left_to_right or ergodic");
    cmd->add_option("--delta", mopts.delta,
                    "Left-to-right max forward skip (<=0: unlimited)");
    cmd->add_option("--chains", mopts.chains, "FHMM chain count")
        ->each([&](const std::string&) { mopts.chains_given = true; });
    cmd->add_option("--init", mopts.init, "Transition init: uniform or random");
    cmd->add_option("--iterations", mopts.iterations, "Training iterations");
  };
  auto add_decision_options = [&](CLI::App* cmd) {
    cmd->add_option("--decision", dopts.decision,
                    "max, threshold, linear, tree or forest");
    cmd->add_option("--decision-threshold", dopts.threshold,
                    "Boundary for --decision threshold");
    cmd->add_option("--loss", dopts.loss, "logistic or squared_hinge");
    cmd->add_option("--penalty", dopts.penalty, "l1 or l2");
    cmd->add_option("--C", dopts.c_value, "Loss weight for the linear decision");
  };

  CLI::App* dataset_cmd = app.add_subcommand("dataset", "Inspect and convert datasets");
  dataset_cmd->require_subcommand(1);
  CLI::App* validate_cmd =
      dataset_cmd->add_subcommand("validate", "Check a manifest or archive");
  validate_cmd->add_option("--data", data, "Manifest or archive path")->required();
  CLI::App* report_cmd =
      dataset_cmd->add_subcommand("report", "Label and combination counts");
  report_cmd->add_option("--data", data, "Manifest or archive path")->required();
  report_cmd->add_option("--csv", csv_path, "Also write the counts as CSV");
  CLI::App* export_cmd =
      dataset_cmd->add_subcommand("export", "Write a single-file archive");
  export_cmd->add_option("--data", data, "Manifest or archive path")->required();
  export_cmd->add_option("--out", out_path, "Archive file to write")->required();

  CLI::App* synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  synth_cmd->add_option("--spec", spec_path, "Synth spec JSON")->required();
  synth_cmd->add_option("--out", out_path, "Output dataset directory")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "Train a classification system");
  train_cmd->require_subcommand(1);
  CLI::App* train_ps = train_cmd->add_subcommand(
      "powerset", "One model per observed label combination");
  CLI::App* train_ml =
      train_cmd->add_subcommand("multilabel", "One model per label + decision stage");
  for (CLI::App* cmd : {train_ps, train_ml}) {
    cmd->add_option("--data", data, "Manifest or archive path")->required();
    cmd->add_option("--out", out_path, "Bundle directory to write")->required();
    add_feature_options(cmd);
    add_model_options(cmd);
  }
  add_decision_options(train_ml);

  CLI::App* classify_cmd = app.add_subcommand("classify", "Classify one motion file");
  classify_cmd->add_option("--bundle", bundle_dir, "Trained bundle directory")
      ->required();
  classify_cmd->add_option("--motion", motion_path, "Motion CSV file")->required();
  classify_cmd->add_flag("--json", as_json, "Emit JSON with per-model scores");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Cross-validated evaluation");
  eval_cmd->require_subcommand(1);
  CLI::App* kfold_cmd = eval_cmd->add_subcommand("kfold", "Stratified k-fold metrics");
  kfold_cmd->add_option("--data", data, "Manifest or archive path")->required();
  kfold_cmd->add_option("--system", system_kind, "powerset or multilabel");
  kfold_cmd->add_option("--k", k, "Fold count");
  kfold_cmd->add_option("--csv", csv_path, "Write the metrics table as CSV");
  add_feature_options(kfold_cmd);
  add_model_options(kfold_cmd);
  add_decision_options(kfold_cmd);

  CLI::App* select_cmd =
      app.add_subcommand("select-features", "Backward elimination over features");
  select_cmd->add_option("--data", data, "Manifest or archive path")->required();
  select_cmd->add_option("--candidates", candidates,
                         "Comma-separated candidate features")
      ->required();
  select_cmd->add_option("--folds", folds, "Folds per evaluation");
  select_cmd->add_option("--min-features", min_features, "Stop at this many left");
  select_cmd->add_option("--csv", csv_path, "Write the elimination trace as CSV");
  add_feature_options(select_cmd);
  add_model_options(select_cmd);

  CLI::App* grid_cmd = app.add_subcommand("grid-search", "Sweep hyperparameters");
  grid_cmd->add_option("--data", data, "Manifest or archive path")->required();
  grid_cmd->add_option("--grid", grid_path, "Grid axes JSON")->required();
  grid_cmd->add_option("--system", system_kind, "powerset or multilabel");
  grid_cmd->add_option("--k", k, "Fold count per grid point");
  grid_cmd->add_option("--csv", csv_path, "Write the ranked results as CSV");
  add_feature_options(grid_cmd);
  add_model_options(grid_cmd);
  add_decision_options(grid_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate_cmd) return run_dataset_validate(data);
    if (*report_cmd) return run_dataset_report(data, csv_path, seed);
    if (*export_cmd) return run_dataset_export(data, out_path);
    if (*synth_cmd) return run_synth(spec_path, out_path);
    if (*train_ps)
      return run_train("powerset", data, fopts, mopts, dopts, seed, threads,
                       out_path);
    if (*train_ml)
      return run_train("multilabel", data, fopts, mopts, dopts, seed, threads,
                       out_path);
    if (*classify_cmd) return run_classify(bundle_dir, motion_path, as_json);
    if (*kfold_cmd)
      return run_eval_kfold(system_kind, data, fopts, mopts, dopts, k, seed,
                            threads, csv_path);
    if (*select_cmd)
      return run_select_features(data, candidates, fopts, mopts, folds,
                                 min_features, seed, threads, csv_path);
    if (*grid_cmd)
      return run_grid_search(system_kind, data, grid_path, fopts, mopts, dopts, k,
                             seed, threads, csv_path);
  } catch (const io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const validation_error& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const training_error& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
