#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvrbm/training.hpp"

namespace {

using namespace mvrbm;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

struct Opts {
  std::string schema_path;
  std::string data_path;
  std::string model_path;
  std::string output_path;
  std::string report_path;
  std::string log_path;
  std::string schema_out_path;
  std::string target_name;
  std::string objective_str;  // empty = subcommand default
  bool baseline = false;
  bool no_recon_log = false;
  double mask_rate = 0.2;
  double synth_mask_rate = 0.0;
  double split = 0.8;
  std::uint64_t seed = 0;
  std::size_t synth_n = 1000;
  int burn_in = 1000;
  int thin = 10;
  TrainConfig train;
};

void add_train_flags(CLI::App* cmd, Opts& o) {
  cmd->add_option("--objective", o.objective_str,
                  "generative | discriminative | hybrid | pretrain_finetune");
  cmd->add_option("-k,--hidden", o.train.hidden_units, "Hidden units")->capture_default_str();
  cmd->add_option("--epochs", o.train.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", o.train.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--learning-rate", o.train.learning_rate, "SGD step size")
      ->capture_default_str();
  cmd->add_option("--momentum", o.train.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--weight-decay", o.train.weight_decay, "L2 decay on interaction weights")
      ->capture_default_str();
  cmd->add_option("--cd-steps", o.train.cd_steps, "Contrastive-divergence chain length")
      ->capture_default_str();
  cmd->add_option("--lambda", o.train.lambda, "Hybrid mix: weight of the generative term")
      ->capture_default_str();
  cmd->add_flag("--freeze-gamma", o.train.freeze_gamma, "Keep tie strengths fixed");
  cmd->add_option("--init-scale", o.train.init_scale, "Half-width of the weight init range")
      ->capture_default_str();
  cmd->add_option("--threads", o.train.threads, "Worker threads for gradient batches")
      ->capture_default_str();
  cmd->add_flag("--exact-gradient", o.train.exact_gradient,
                "Enumerated gradient instead of CD (tiny models)");
  cmd->add_option("--budget", o.train.budget.max_states, "Enumeration budget in states")
      ->capture_default_str();
  cmd->add_option("--grid-lo", o.train.target_grid.lo, "Continuous-target grid lower edge")
      ->capture_default_str();
  cmd->add_option("--grid-hi", o.train.target_grid.hi, "Continuous-target grid upper edge")
      ->capture_default_str();
  cmd->add_option("--grid-points", o.train.target_grid.n, "Continuous-target grid size")
      ->capture_default_str();
  cmd->add_flag("--no-recon-log", o.no_recon_log,
                "Skip per-epoch reconstruction errors in the log");
  cmd->add_option("--pretrain-epochs", o.train.pretrain_epochs, "Stage-1 epochs");
  cmd->add_option("--finetune-epochs", o.train.finetune_epochs, "Stage-2 epochs");
}

Objective resolve_objective(const Opts& o, Objective fallback) {
  return o.objective_str.empty() ? fallback : objective_from_name(o.objective_str);
}

// Target presence is checked before any file is opened so a bad combination
// fails fast with a config error.
void require_target_flag(const Opts& o, Objective objective) {
  if (objective != Objective::generative && o.target_name.empty()) {
    throw ConfigError(std::string(objective_name(objective)) +
                      " training requires --target");
  }
}

TrainConfig make_config(const Opts& o, const DatasetSchema& schema, Objective objective) {
  TrainConfig cfg = o.train;
  cfg.seed = o.seed;
  cfg.objective = objective;
  cfg.track_reconstruction = !o.no_recon_log;
  if (!o.target_name.empty()) {
    const int idx = schema.index_of(o.target_name);
    if (idx < 0) throw ConfigError("unknown target variable '" + o.target_name + "'");
    cfg.target = static_cast<std::size_t>(idx);
  }
  validate_config(cfg, schema);
  return cfg;
}

struct LoadedInputs {
  DatasetSchema schema;
  Dataset data;
  std::optional<SavedModel> model;
};

// With --model the embedded schema and standardization govern parsing;
// otherwise the schema file does and standardization comes from the data.
LoadedInputs load_inputs(const Opts& o) {
  LoadedInputs in;
  if (!o.model_path.empty()) {
    in.model = load_model(o.model_path);
    in.schema = in.model->params.schema;
  } else {
    if (o.schema_path.empty()) throw ConfigError("either --schema or --model is required");
    in.schema = parse_schema(read_file(o.schema_path));
  }
  const std::string text = read_file(o.data_path);
  in.data = in.model ? parse_dataset_with(text, in.schema, in.model->standardization)
                     : parse_dataset(text, in.schema);
  return in;
}

int run_train(const Opts& o) {
  const Objective objective = resolve_objective(o, Objective::generative);
  require_target_flag(o, objective);
  const DatasetSchema schema = parse_schema(read_file(o.schema_path));
  const TrainConfig cfg = make_config(o, schema, objective);
  const Dataset data = parse_dataset(read_file(o.data_path), schema);
  TrainResult result = train(data, cfg);
  save_model(o.model_path, SavedModel{std::move(result.params), data.standardization});
  if (!o.log_path.empty()) write_file(o.log_path, format_training_log(result.log));
  return 0;
}

int run_complete(const Opts& o) {
  if (!(o.mask_rate >= 0.0 && o.mask_rate < 1.0)) {
    throw ConfigError("mask rate must be in [0, 1)");
  }
  const Objective objective = resolve_objective(o, Objective::generative);
  require_target_flag(o, objective);
  LoadedInputs in = load_inputs(o);
  const std::size_t n = in.data.instances.size();
  const std::size_t width = in.schema.size();

  Dataset masked = in.data;
  std::vector<std::vector<std::uint8_t>> mask(n, std::vector<std::uint8_t>(width, 0));
  Rng mask_rng = Rng(o.seed).split(102);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      if (!in.data.instances[i].observed(j)) continue;
      if (mask_rng.bernoulli(o.mask_rate)) {
        masked.instances[i].values[j] = MissingV{};
        mask[i][j] = 1;
      }
    }
  }

  ModelParams params = in.model ? in.model->params
                                : train(masked, make_config(o, in.schema, objective)).params;

  std::vector<Instance> completed;
  completed.reserve(n);
  for (const Instance& inst : masked.instances) {
    completed.push_back(complete(params, CompletionRequest{inst, {}}, 0.5,
                                 o.train.budget.max_states));
  }
  const EvalReport model_report = evaluate(in.schema, in.data.instances, completed, &mask);

  std::optional<EvalReport> baseline_report;
  if (o.baseline) {
    const BaselineModel bm = fit_baseline(masked);
    std::vector<Instance> base_completed;
    base_completed.reserve(n);
    for (const Instance& inst : masked.instances) {
      base_completed.push_back(baseline_complete(bm, CompletionRequest{inst, {}}));
    }
    baseline_report = evaluate(in.schema, in.data.instances, base_completed, &mask);
  }

  if (!o.output_path.empty()) {
    Dataset out = std::move(masked);
    out.instances = std::move(completed);
    write_file(o.output_path, serialize_dataset(out));
  }
  emit(o.report_path,
       format_report(model_report, baseline_report ? &*baseline_report : nullptr));
  return 0;
}

int run_predict(const Opts& o) {
  if (o.target_name.empty()) throw ConfigError("predict requires --target");
  if (!(o.split > 0.0 && o.split < 1.0)) throw ConfigError("split must be in (0, 1)");
  const Objective objective = resolve_objective(o, Objective::discriminative);
  LoadedInputs in = load_inputs(o);
  const int target_idx = in.schema.index_of(o.target_name);
  if (target_idx < 0) throw ConfigError("unknown target variable '" + o.target_name + "'");
  const auto target = static_cast<std::size_t>(target_idx);
  const VariableSpec& spec = in.schema.variables[target];

  const std::size_t n = in.data.instances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = Rng(o.seed).split(101);
  split_rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(o.split * static_cast<double>(n));
  if (n_train >= n) throw ConfigError("test split is empty");
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  Dataset train_ds{in.schema, {}, in.data.standardization};
  train_ds.instances.reserve(train_idx.size());
  for (std::size_t i : train_idx) train_ds.instances.push_back(in.data.instances[i]);

  ModelParams params;
  if (in.model) {
    params = in.model->params;
  } else {
    if (train_idx.empty()) throw ConfigError("train split is empty");
    params = train(train_ds, make_config(o, in.schema, objective)).params;
  }

  std::string predictions = "index\t" + spec.name + "\n";
  std::vector<Instance> truths;
  std::vector<Instance> preds;
  truths.reserve(test_idx.size());
  preds.reserve(test_idx.size());
  for (std::size_t i : test_idx) {
    const Instance& inst = in.data.instances[i];
    Instance view = inst;
    view.values[target] = MissingV{};
    const Value y = predict(params, target, view, 0.5, o.train.budget.max_states);
    predictions += std::to_string(i);
    predictions += '\t';
    predictions += format_cell(spec, in.data.standardization[target], y);
    predictions += '\n';
    Instance truth = empty_instance(in.schema.size());
    if (inst.observed(target)) truth.values[target] = inst.values[target];
    Instance pred = empty_instance(in.schema.size());
    pred.values[target] = y;
    truths.push_back(std::move(truth));
    preds.push_back(std::move(pred));
  }
  const EvalReport model_report = evaluate(in.schema, truths, preds);

  std::optional<EvalReport> baseline_report;
  if (o.baseline) {
    const BaselineModel bm = fit_baseline(train_ds);
    const Value y = baseline_predict(bm, target);
    std::vector<Instance> base_preds;
    base_preds.reserve(test_idx.size());
    for (std::size_t r = 0; r < test_idx.size(); ++r) {
      Instance pred = empty_instance(in.schema.size());
      pred.values[target] = y;
      base_preds.push_back(std::move(pred));
    }
    baseline_report = evaluate(in.schema, truths, base_preds);
  }

  if (!o.output_path.empty()) write_file(o.output_path, predictions);
  emit(o.report_path,
       format_report(model_report, baseline_report ? &*baseline_report : nullptr));
  return 0;
}

int run_features(const Opts& o) {
  LoadedInputs in = load_inputs(o);
  if (!in.model) throw ConfigError("features requires --model");
  const int k = in.model->params.hidden_units;
  std::string out;
  for (int j = 0; j < k; ++j) {
    out += (j == 0 ? "h" : "\th") + std::to_string(j + 1);
  }
  out += '\n';
  for (const Instance& inst : in.data.instances) {
    const Eigen::VectorXd p = extract_features(in.model->params, inst);
    for (int j = 0; j < k; ++j) {
      if (j > 0) out += '\t';
      out += format_double(p[j]);
    }
    out += '\n';
  }
  emit(o.output_path, out);
  return 0;
}

int run_reconstruct(const Opts& o) {
  const Objective objective = resolve_objective(o, Objective::generative);
  require_target_flag(o, objective);
  LoadedInputs in = load_inputs(o);
  const ModelParams params =
      in.model ? in.model->params : train(in.data, make_config(o, in.schema, objective)).params;
  std::vector<Instance> preds;
  preds.reserve(in.data.instances.size());
  for (const Instance& inst : in.data.instances) preds.push_back(reconstruct(params, inst));
  const EvalReport model_report = evaluate(in.schema, in.data.instances, preds);

  std::optional<EvalReport> baseline_report;
  if (o.baseline) {
    const BaselineModel bm = fit_baseline(in.data);
    std::vector<Instance> base_preds;
    base_preds.reserve(in.data.instances.size());
    for (const Instance& inst : in.data.instances) {
      Instance pred = empty_instance(in.schema.size());
      for (std::size_t j = 0; j < in.schema.size(); ++j) {
        if (inst.observed(j)) pred.values[j] = baseline_predict(bm, j);
      }
      base_preds.push_back(std::move(pred));
    }
    baseline_report = evaluate(in.schema, in.data.instances, base_preds);
  }
  emit(o.report_path,
       format_report(model_report, baseline_report ? &*baseline_report : nullptr));
  return 0;
}

int run_synth(const Opts& o) {
  if (!(o.synth_mask_rate >= 0.0 && o.synth_mask_rate < 1.0)) {
    throw ConfigError("mask rate must be in [0, 1)");
  }
  const SavedModel model = load_model(o.model_path);
  Dataset ds = generate_synthetic(model.params, o.synth_n, o.seed, o.burn_in, o.thin,
                                  o.synth_mask_rate);
  ds.standardization = model.standardization;
  emit(o.output_path, serialize_dataset(ds));
  if (!o.schema_out_path.empty()) {
    write_file(o.schema_out_path, serialize_schema(model.params.schema));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-variate restricted Boltzmann machine"};
  app.require_subcommand(1);
  Opts o;

  CLI::App* train_cmd = app.add_subcommand("train", "Fit a model and save it");
  train_cmd->add_option("--schema", o.schema_path, "Schema file")->required();
  train_cmd->add_option("--data", o.data_path, "Training data (CSV)")->required();
  train_cmd->add_option("--model", o.model_path, "Output model path")->required();
  train_cmd->add_option("--log", o.log_path, "Training log path (TSV)");
  train_cmd->add_option("--target", o.target_name, "Target variable name");
  train_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  add_train_flags(train_cmd, o);

  CLI::App* complete_cmd =
      app.add_subcommand("complete", "Mask entries, fill them back in, and score");
  complete_cmd->add_option("--schema", o.schema_path, "Schema file");
  complete_cmd->add_option("--data", o.data_path, "Data (CSV)")->required();
  complete_cmd->add_option("--model", o.model_path, "Trained model (skips training)");
  complete_cmd->add_option("--mask-rate", o.mask_rate, "Fraction of observed entries to hide")
      ->capture_default_str();
  complete_cmd->add_option("--output", o.output_path, "Completed dataset path");
  complete_cmd->add_option("--report", o.report_path, "Report path (default stdout)");
  complete_cmd->add_flag("--baseline", o.baseline, "Add an independent-model column");
  complete_cmd->add_option("--target", o.target_name, "Target variable name");
  complete_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  add_train_flags(complete_cmd, o);

  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Split, train on one side, predict a target on the other");
  predict_cmd->add_option("--schema", o.schema_path, "Schema file");
  predict_cmd->add_option("--data", o.data_path, "Data (CSV)")->required();
  predict_cmd->add_option("--model", o.model_path, "Trained model (skips training)");
  predict_cmd->add_option("--target", o.target_name, "Target variable name")->required();
  predict_cmd->add_option("--split", o.split, "Train fraction")->capture_default_str();
  predict_cmd->add_option("--output", o.output_path, "Predictions path");
  predict_cmd->add_option("--report", o.report_path, "Report path (default stdout)");
  predict_cmd->add_flag("--baseline", o.baseline, "Add an independent-model column");
  predict_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  add_train_flags(predict_cmd, o);

  CLI::App* features_cmd =
      app.add_subcommand("features", "Export posterior hidden activations");
  features_cmd->add_option("--data", o.data_path, "Data (CSV)")->required();
  features_cmd->add_option("--model", o.model_path, "Trained model")->required();
  features_cmd->add_option("--output", o.output_path, "Features path (default stdout)");

  CLI::App* reconstruct_cmd =
      app.add_subcommand("reconstruct", "Re-decode observed entries and score");
  reconstruct_cmd->add_option("--schema", o.schema_path, "Schema file");
  reconstruct_cmd->add_option("--data", o.data_path, "Data (CSV)")->required();
  reconstruct_cmd->add_option("--model", o.model_path, "Trained model (skips training)");
  reconstruct_cmd->add_option("--report", o.report_path, "Report path (default stdout)");
  reconstruct_cmd->add_flag("--baseline", o.baseline, "Add an independent-model column");
  reconstruct_cmd->add_option("--target", o.target_name, "Target variable name");
  reconstruct_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  add_train_flags(reconstruct_cmd, o);

  CLI::App* synth_cmd = app.add_subcommand("synth", "Sample a dataset from a model");
  synth_cmd->add_option("--model", o.model_path, "Source model")->required();
  synth_cmd->add_option("-n,--instances", o.synth_n, "Rows to draw")->capture_default_str();
  synth_cmd->add_option("--burn-in", o.burn_in, "Chain steps before the first draw")
      ->capture_default_str();
  synth_cmd->add_option("--thin", o.thin, "Chain steps between draws")->capture_default_str();
  synth_cmd->add_option("--mask-rate", o.synth_mask_rate, "Fraction of entries to hide")
      ->capture_default_str();
  synth_cmd->add_option("--output", o.output_path, "Dataset path (default stdout)");
  synth_cmd->add_option("--schema-out", o.schema_out_path, "Also write the schema here");
  synth_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(o);
    if (complete_cmd->parsed()) return run_complete(o);
    if (predict_cmd->parsed()) return run_predict(o);
    if (features_cmd->parsed()) return run_features(o);
    if (reconstruct_cmd->parsed()) return run_reconstruct(o);
    if (synth_cmd->parsed()) return run_synth(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
