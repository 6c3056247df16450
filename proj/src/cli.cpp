#include "adrisk/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>

#include "adrisk/cohort.hpp"
#include "adrisk/cohort_io.hpp"
#include "adrisk/errors.hpp"
#include "adrisk/eval.hpp"
#include "adrisk/log.hpp"
#include "adrisk/preprocess.hpp"
#include "adrisk/synth.hpp"
#include "adrisk/train.hpp"

#include "../vendor/CLI11.hpp"
#include "../vendor/json.hpp"

namespace fs = std::filesystem;

namespace adrisk::cli {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

ExplanationTrace explain_subject(const model::ModelParams& params,
                                 const prep::ModelInput& input) {
  auto fwd = model::forward_subject(input, params);
  ExplanationTrace trace;
  trace.subject_id = input.subject_id;
  trace.rows.reserve(input.T);
  for (int t = 0; t < input.T; ++t) {
    const auto& step = fwd.steps[t];
    TraceRow row;
    row.month = input.months[t];
    row.risk = step.risk;
    for (int c = 0; c < cohort::kCompositeCount; ++c) {
      row.pred_z[c] = std::isnan(step.aux[c])
                          ? step.aux[c]
                          : prep::composite_from_unit(step.aux[c], c);
      row.truth_z[c] = input.labels.aux_mask[t][c]
                           ? input.labels.aux_targets[t][c]
                           : std::numeric_limits<double>::quiet_NaN();
      row.relevance[c] = step.relevance[c];
    }
    row.label = input.labels.y_mask[t]
                    ? (input.labels.y[t] ? 1.0 : 0.0)
                    : std::numeric_limits<double>::quiet_NaN();
    trace.rows.push_back(row);
  }
  return trace;
}

void write_trace(const ExplanationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << "month,risk";
  for (auto name : cohort::kCompositeNames) out << ",pred_" << name;
  for (auto name : cohort::kCompositeNames) out << ",truth_" << name;
  for (auto name : cohort::kCompositeNames) out << ",relevance_" << name;
  out << ",label\n";
  for (const auto& row : trace.rows) {
    out << row.month << ',' << fmt(row.risk);
    for (double v : row.pred_z) out << ',' << fmt(v);
    for (double v : row.truth_z) out << ',' << fmt(v);
    for (double v : row.relevance) out << ',' << fmt(v);
    out << ',' << fmt(row.label) << '\n';
  }
  if (!out.good()) throw UsageError("failed writing " + path);
}

void write_traces_long(const std::vector<ExplanationTrace>& traces,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << "subject_id,month,series,value\n";
  auto record = [&](const std::string& id, int month, const std::string& series,
                    double v) {
    if (std::isnan(v)) return;  // plot data carries only produced values
    out << id << ',' << month << ',' << series << ',' << fmt(v) << '\n';
  };
  for (const auto& trace : traces) {
    for (const auto& row : trace.rows) {
      record(trace.subject_id, row.month, "risk", row.risk);
      for (int c = 0; c < cohort::kCompositeCount; ++c)
        record(trace.subject_id, row.month,
               "pred_" + std::string(cohort::kCompositeNames[c]), row.pred_z[c]);
      for (int c = 0; c < cohort::kCompositeCount; ++c)
        record(trace.subject_id, row.month,
               "truth_" + std::string(cohort::kCompositeNames[c]),
               row.truth_z[c]);
      for (int c = 0; c < cohort::kCompositeCount; ++c)
        record(trace.subject_id, row.month,
               "relevance_" + std::string(cohort::kCompositeNames[c]),
               row.relevance[c]);
      record(trace.subject_id, row.month, "label", row.label);
    }
  }
  if (!out.good()) throw UsageError("failed writing " + path);
}

OutputLock::OutputLock(const std::string& dir) : path_(dir + "/.lock") {
  std::FILE* f = std::fopen(path_.c_str(), "wx");  // exclusive creation
  if (!f)
    throw UsageError("output directory '" + dir +
                     "' is already owned by another run (" + path_ +
                     " exists); remove the lock if that run is gone");
  std::fclose(f);
}

OutputLock::~OutputLock() { std::remove(path_.c_str()); }

namespace {

struct RunConfig {
  model::ModelConfig model;
  train::TrainConfig train;
};

void check_keys(const nlohmann::json& j,
                std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known)
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

RunConfig load_run_config(const std::string& path) {
  RunConfig rc;
  if (path.empty()) return rc;
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IngestError("malformed config file " + path + ": " + e.what());
  }
  try {
    check_keys(j, {"model", "train"}, "config root");
    if (j.contains("model")) {
      const auto& m = j["model"];
      check_keys(m,
                 {"mode", "single_task_target", "use_imaging", "use_cognition",
                  "use_clinical", "lstm_width", "lstm_layers", "head_widths",
                  "clinical_widths", "dropout"},
                 "config section 'model'");
      auto& mc = rc.model;
      if (m.contains("mode"))
        mc.mode = model::mode_from_name(m["mode"].get<std::string>());
      if (m.contains("single_task_target"))
        mc.single_task_target = m["single_task_target"].get<int>();
      if (m.contains("use_imaging")) mc.use_imaging = m["use_imaging"].get<bool>();
      if (m.contains("use_cognition"))
        mc.use_cognition = m["use_cognition"].get<bool>();
      if (m.contains("use_clinical"))
        mc.use_clinical = m["use_clinical"].get<bool>();
      if (m.contains("lstm_width")) mc.lstm_width = m["lstm_width"].get<int>();
      if (m.contains("lstm_layers")) mc.lstm_layers = m["lstm_layers"].get<int>();
      if (m.contains("head_widths"))
        mc.head_widths = m["head_widths"].get<std::vector<int>>();
      if (m.contains("clinical_widths")) {
        auto w = m["clinical_widths"].get<std::vector<int>>();
        if (w.size() != 2)
          throw ConfigError("clinical_widths must list exactly two widths");
        mc.clinical_widths = {w[0], w[1]};
      }
      if (m.contains("dropout")) mc.dropout = m["dropout"].get<double>();
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      check_keys(t,
                 {"epochs", "batch_size", "lr", "weight_decay", "weights",
                  "early_stop_patience"},
                 "config section 'train'");
      auto& tc = rc.train;
      if (t.contains("epochs")) tc.epochs = t["epochs"].get<int>();
      if (t.contains("batch_size")) tc.batch_size = t["batch_size"].get<int>();
      if (t.contains("lr")) tc.adam.lr = t["lr"].get<double>();
      if (t.contains("weight_decay"))
        tc.adam.weight_decay = t["weight_decay"].get<double>();
      if (t.contains("weights")) {
        const auto& w = t["weights"];
        check_keys(w, {"main", "aux", "imp"}, "config section 'train.weights'");
        if (w.contains("main")) tc.weights.lambda_main = w["main"].get<double>();
        if (w.contains("aux")) tc.weights.lambda_aux = w["aux"].get<double>();
        if (w.contains("imp")) tc.weights.lambda_imp = w["imp"].get<double>();
      }
      if (t.contains("early_stop_patience"))
        tc.early_stop_patience = t["early_stop_patience"].get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config value with the wrong type in " + path + ": " +
                      e.what());
  }
  return rc;
}

cohort::Cohort load_classified(const std::string& dir) {
  return cohort::classify_cohort(cohort::read_cohort(dir));
}

struct SplitInputs {
  std::vector<prep::ModelInput> train, val, test;
  prep::ScalerParams scaler;
};

SplitInputs split_and_scale(const cohort::Cohort& classified,
                            std::uint64_t seed) {
  auto split = cohort::split_cohort(classified, {}, seed);
  SplitInputs si;
  si.scaler = prep::fit_scaler(split.train);
  si.train = prep::build_model_inputs(split.train, si.scaler);
  si.val = prep::build_model_inputs(split.val, si.scaler);
  si.test = prep::build_model_inputs(split.test, si.scaler);
  return si;
}

// Test split of the cohort under the checkpoint's master seed, scaled with
// the scaler the checkpoint was trained against.
std::vector<prep::ModelInput> checkpoint_test_inputs(
    const cohort::Cohort& classified, const train::Checkpoint& ck) {
  auto split = cohort::split_cohort(classified, {}, ck.seed);
  return prep::build_model_inputs(split.test, ck.scaler);
}

bool same_scaler(const prep::ScalerParams& a, const prep::ScalerParams& b) {
  return a.fingerprint == b.fingerprint && a.p1 == b.p1 && a.p99 == b.p99 &&
         a.lo == b.lo && a.hi == b.hi;
}

void cmd_gen_synth(int n, std::uint64_t seed, const std::string& out) {
  cohort::SynthConfig sc;
  sc.n_subjects = n;
  sc.seed = seed;
  auto generated = cohort::generate_synthetic_cohort(sc);
  fs::create_directories(out);
  OutputLock lock(out);
  cohort::write_cohort(generated, out);
  log_info("wrote " + std::to_string(generated.size()) +
           " synthetic subjects to " + out);
}

void cmd_preprocess(const std::string& cohort_dir, std::uint64_t seed,
                    const std::string& out) {
  auto classified = load_classified(cohort_dir);
  auto split = cohort::split_cohort(classified, {}, seed);
  auto scaler = prep::fit_scaler(split.train);
  fs::create_directories(out);
  OutputLock lock(out);

  std::ofstream sp(out + "/split.csv");
  if (!sp) throw UsageError("cannot write " + out + "/split.csv");
  sp << "subject_id,partition\n";
  auto dump = [&](const cohort::Cohort& part, const char* name) {
    for (const auto& s : part.subjects) sp << s.id << ',' << name << '\n';
  };
  dump(split.train, "train");
  dump(split.val, "val");
  dump(split.test, "test");
  if (!sp.good()) throw UsageError("failed writing " + out + "/split.csv");

  nlohmann::json j;
  j["fingerprint"] = scaler.fingerprint;
  j["p1"] = scaler.p1;
  j["p99"] = scaler.p99;
  j["lo"] = scaler.lo;
  j["hi"] = scaler.hi;
  std::ofstream sj(out + "/scaler.json");
  if (!sj) throw UsageError("cannot write " + out + "/scaler.json");
  sj << j.dump(2) << '\n';
  if (!sj.good()) throw UsageError("failed writing " + out + "/scaler.json");
  log_info("split " + std::to_string(split.train.size()) + "/" +
           std::to_string(split.val.size()) + "/" +
           std::to_string(split.test.size()) + " written to " + out);
}

void cmd_train(const std::string& cohort_dir, std::uint64_t seed,
               const std::string& out, model::ModelConfig mcfg,
               train::TrainConfig tcfg) {
  auto classified = load_classified(cohort_dir);
  auto si = split_and_scale(classified, seed);
  mcfg.seed = seed;
  tcfg.seed = seed;
  auto result = train::train_model(si.train, si.val, mcfg, tcfg);
  fs::create_directories(out);
  OutputLock lock(out);
  train::save_checkpoint(result.params, si.scaler, seed, out + "/model.json");
  train::write_history(result.history, out + "/history.csv");
  log_info("checkpoint after epoch " + std::to_string(result.last_epoch) +
           " (best " + std::to_string(result.best_epoch) + ") written to " +
           out);
}

void cmd_evaluate(const std::string& ckpt, const std::string& cohort_dir,
                  const std::string& out, const std::string& name, int B,
                  double alpha, int threads) {
  auto ck = train::load_checkpoint(ckpt);
  auto classified = load_classified(cohort_dir);
  auto test = checkpoint_test_inputs(classified, ck);
  auto report = eval::compare_models({&ck.params}, {name}, 0, test, B, alpha,
                                     ck.seed, threads);
  fs::create_directories(out);
  OutputLock lock(out);
  eval::write_eval_report(report, out);
  log_info("evaluation over " + std::to_string(report.n_test_subjects) +
           " test subjects written to " + out);
}

void cmd_compare(const std::vector<std::string>& ckpts,
                 std::vector<std::string> names, int proposed,
                 const std::string& cohort_dir, const std::string& out, int B,
                 double alpha, int threads) {
  std::vector<train::Checkpoint> loaded;
  loaded.reserve(ckpts.size());
  for (const auto& p : ckpts) loaded.push_back(train::load_checkpoint(p));
  for (std::size_t i = 1; i < loaded.size(); ++i) {
    if (loaded[i].seed != loaded[0].seed)
      throw ConfigError("checkpoints disagree on the master seed, so their "
                        "test splits differ");
    if (!same_scaler(loaded[i].scaler, loaded[0].scaler))
      throw ConfigError("checkpoints were fitted against different "
                        "preprocessing parameters");
  }
  if (names.empty())
    for (const auto& p : ckpts) names.push_back(fs::path(p).stem().string());
  if (names.size() != ckpts.size())
    throw UsageError("got " + std::to_string(names.size()) + " names for " +
                     std::to_string(ckpts.size()) + " checkpoints");

  auto classified = load_classified(cohort_dir);
  auto test = checkpoint_test_inputs(classified, loaded[0]);
  std::vector<const model::ModelParams*> models;
  models.reserve(loaded.size());
  for (const auto& ck : loaded) models.push_back(&ck.params);
  auto report = eval::compare_models(models, names, proposed, test, B, alpha,
                                     loaded[0].seed, threads);
  fs::create_directories(out);
  OutputLock lock(out);
  eval::write_eval_report(report, out);
  log_info("comparison of " + std::to_string(models.size()) +
           " checkpoints written to " + out);
}

void cmd_ablate(const std::string& cohort_dir, std::uint64_t seed,
                const std::string& out, model::ModelConfig mcfg,
                train::TrainConfig tcfg, int B, double alpha) {
  auto classified = load_classified(cohort_dir);
  auto si = split_and_scale(classified, seed);
  mcfg.seed = seed;
  tcfg.seed = seed;
  auto rows = eval::run_ablation(mcfg, si.train, si.val, si.test, tcfg, B,
                                 alpha, seed);
  fs::create_directories(out);
  OutputLock lock(out);
  eval::write_ablation(rows, out + "/ablation.csv");
  log_info("ablation over " + std::to_string(rows.size()) +
           " modality subsets written to " + out);
}

void cmd_explain(const std::string& ckpt, const std::string& cohort_dir,
                 const std::string& out, const std::string& subjects) {
  auto ck = train::load_checkpoint(ckpt);
  auto classified = load_classified(cohort_dir);
  auto inputs = prep::build_model_inputs(classified, ck.scaler);

  std::vector<const prep::ModelInput*> picked;
  if (subjects == "all") {
    for (const auto& in : inputs) picked.push_back(&in);
  } else {
    std::string known;
    for (const auto& in : inputs)
      known += (known.empty() ? "" : ", ") + in.subject_id;
    std::size_t start = 0;
    while (start <= subjects.size()) {
      std::size_t comma = subjects.find(',', start);
      std::string id = subjects.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!id.empty()) {
        auto it = std::find_if(inputs.begin(), inputs.end(),
                               [&](const auto& in) { return in.subject_id == id; });
        if (it == inputs.end())
          throw IngestError("unknown subject id '" + id +
                            "'; known ids: " + known);
        picked.push_back(&*it);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (picked.empty()) throw UsageError("no subject ids given");
  }

  fs::create_directories(out);
  OutputLock lock(out);
  std::vector<ExplanationTrace> traces;
  traces.reserve(picked.size());
  for (const auto* in : picked) {
    traces.push_back(explain_subject(ck.params, *in));
    write_trace(traces.back(), out + "/trace_" + in->subject_id + ".csv");
  }
  write_traces_long(traces, out + "/traces_long.csv");
  log_info("explanation traces for " + std::to_string(traces.size()) +
           " subjects written to " + out);
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"hierarchical multi-task progression modeling over longitudinal "
               "cognitive-impairment cohorts"};
  app.require_subcommand(1);

  // gen-synth
  int gen_n = 634;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-synth",
                                 "generate the calibrated synthetic cohort");
  gen->add_option("--n", gen_n, "number of subjects");
  gen->add_option("--seed", gen_seed, "master seed")->required();
  gen->add_option("--out", gen_out, "output directory")->required();

  // preprocess
  std::string pre_cohort, pre_out;
  std::uint64_t pre_seed = 0;
  auto* pre = app.add_subcommand(
      "preprocess", "split the cohort and fit the feature scaler");
  pre->add_option("--cohort", pre_cohort, "cohort directory")->required();
  pre->add_option("--seed", pre_seed, "master seed")->required();
  pre->add_option("--out", pre_out, "output directory")->required();

  // shared train-style options
  struct TrainOpts {
    std::string cohort, out, config, mode;
    std::uint64_t seed = 0;
    int target = model::kProgressionTarget;
    bool no_imaging = false, no_cognition = false, no_clinical = false;
    int lstm_width = 0, lstm_layers = 0, epochs = 0, batch_size = 0,
        patience = 0;
    double dropout = 0, lr = 0, lambda_main = 0, lambda_aux = 0, lambda_imp = 0;
  };
  auto add_shared = [](CLI::App* sub, TrainOpts& o,
                       std::map<std::string, CLI::Option*>& opts,
                       bool with_mode) {
    sub->add_option("--cohort", o.cohort, "cohort directory")->required();
    sub->add_option("--seed", o.seed, "master seed")->required();
    sub->add_option("--out", o.out, "output directory")->required();
    sub->add_option("--config", o.config, "JSON config file");
    if (with_mode) {
      opts["mode"] = sub->add_option(
          "--mode", o.mode, "hierarchical | parallel_mt | single_task");
      opts["target"] = sub->add_option(
          "--single-task-target", o.target,
          "-1 for progression, 0..3 for one composite (single_task mode)");
      opts["no_imaging"] =
          sub->add_flag("--no-imaging", o.no_imaging, "drop the imaging stream");
      opts["no_cognition"] = sub->add_flag("--no-cognition", o.no_cognition,
                                           "drop the cognition stream");
      opts["no_clinical"] = sub->add_flag("--no-clinical", o.no_clinical,
                                          "drop the clinical branch");
    }
    opts["lstm_width"] =
        sub->add_option("--lstm-width", o.lstm_width, "recurrent layer width");
    opts["lstm_layers"] =
        sub->add_option("--lstm-layers", o.lstm_layers, "stacked layers");
    opts["dropout"] = sub->add_option("--dropout", o.dropout, "head dropout");
    opts["epochs"] = sub->add_option("--epochs", o.epochs, "training epochs");
    opts["batch_size"] =
        sub->add_option("--batch-size", o.batch_size, "subjects per batch");
    opts["lr"] = sub->add_option("--lr", o.lr, "learning rate");
    opts["patience"] = sub->add_option("--patience", o.patience,
                                       "early-stopping patience (0 = off)");
    opts["lambda_main"] =
        sub->add_option("--lambda-main", o.lambda_main, "progression weight");
    opts["lambda_aux"] =
        sub->add_option("--lambda-aux", o.lambda_aux, "auxiliary weight");
    opts["lambda_imp"] =
        sub->add_option("--lambda-imp", o.lambda_imp, "imputation weight");
  };
  auto apply_shared = [](const TrainOpts& o,
                         std::map<std::string, CLI::Option*>& opts,
                         RunConfig& rc) {
    auto given = [&](const char* k) {
      auto it = opts.find(k);
      return it != opts.end() && it->second->count() > 0;
    };
    if (given("mode")) rc.model.mode = model::mode_from_name(o.mode);
    if (given("target")) rc.model.single_task_target = o.target;
    if (given("no_imaging")) rc.model.use_imaging = false;
    if (given("no_cognition")) rc.model.use_cognition = false;
    if (given("no_clinical")) rc.model.use_clinical = false;
    if (given("lstm_width")) rc.model.lstm_width = o.lstm_width;
    if (given("lstm_layers")) rc.model.lstm_layers = o.lstm_layers;
    if (given("dropout")) rc.model.dropout = o.dropout;
    if (given("epochs")) rc.train.epochs = o.epochs;
    if (given("batch_size")) rc.train.batch_size = o.batch_size;
    if (given("lr")) rc.train.adam.lr = o.lr;
    if (given("patience")) rc.train.early_stop_patience = o.patience;
    if (given("lambda_main")) rc.train.weights.lambda_main = o.lambda_main;
    if (given("lambda_aux")) rc.train.weights.lambda_aux = o.lambda_aux;
    if (given("lambda_imp")) rc.train.weights.lambda_imp = o.lambda_imp;
  };

  TrainOpts topt;
  std::map<std::string, CLI::Option*> train_opts;
  auto* tr = app.add_subcommand("train", "fit a model and save a checkpoint");
  add_shared(tr, topt, train_opts, true);

  // evaluate
  std::string ev_ckpt, ev_cohort, ev_out, ev_name = "model";
  int ev_B = 200, ev_threads = 1;
  double ev_alpha = 0.05;
  auto* ev = app.add_subcommand(
      "evaluate", "score a checkpoint on its held-out test split");
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--cohort", ev_cohort, "cohort directory")->required();
  ev->add_option("--out", ev_out, "output directory")->required();
  ev->add_option("--name", ev_name, "row label in the report");
  ev->add_option("--b", ev_B, "bootstrap resamples");
  ev->add_option("--alpha", ev_alpha, "CI miss probability");
  ev->add_option("--threads", ev_threads, "bootstrap worker threads");

  // compare
  std::vector<std::string> cp_ckpts, cp_names;
  std::string cp_cohort, cp_out;
  int cp_proposed = 0, cp_B = 200, cp_threads = 1;
  double cp_alpha = 0.05;
  auto* cp = app.add_subcommand(
      "compare", "compare checkpoints against a designated proposed model");
  cp->add_option("--checkpoints", cp_ckpts, "checkpoint files")
      ->required()
      ->expected(-1);
  cp->add_option("--names", cp_names, "row labels, one per checkpoint")
      ->expected(-1);
  cp->add_option("--proposed", cp_proposed, "index of the proposed model");
  cp->add_option("--cohort", cp_cohort, "cohort directory")->required();
  cp->add_option("--out", cp_out, "output directory")->required();
  cp->add_option("--b", cp_B, "bootstrap resamples");
  cp->add_option("--alpha", cp_alpha, "CI miss probability");
  cp->add_option("--threads", cp_threads, "bootstrap worker threads");

  // ablate
  TrainOpts aopt;
  std::map<std::string, CLI::Option*> ablate_opts;
  int ab_B = 200;
  double ab_alpha = 0.05;
  auto* ab = app.add_subcommand(
      "ablate", "train and score every non-empty modality subset");
  add_shared(ab, aopt, ablate_opts, false);
  ab->add_option("--b", ab_B, "bootstrap resamples");
  ab->add_option("--alpha", ab_alpha, "CI miss probability");

  // explain
  std::string ex_ckpt, ex_cohort, ex_out, ex_subjects = "all";
  auto* ex = app.add_subcommand(
      "explain", "export per-visit risk, composite, and relevance traces");
  ex->add_option("--checkpoint", ex_ckpt, "checkpoint file")->required();
  ex->add_option("--cohort", ex_cohort, "cohort directory")->required();
  ex->add_option("--out", ex_out, "output directory")->required();
  ex->add_option("--subjects", ex_subjects,
                 "'all' or a comma-separated id list");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      cmd_gen_synth(gen_n, gen_seed, gen_out);
    } else if (pre->parsed()) {
      cmd_preprocess(pre_cohort, pre_seed, pre_out);
    } else if (tr->parsed()) {
      RunConfig rc = load_run_config(topt.config);
      apply_shared(topt, train_opts, rc);
      cmd_train(topt.cohort, topt.seed, topt.out, rc.model, rc.train);
    } else if (ev->parsed()) {
      cmd_evaluate(ev_ckpt, ev_cohort, ev_out, ev_name, ev_B, ev_alpha,
                   ev_threads);
    } else if (cp->parsed()) {
      cmd_compare(cp_ckpts, cp_names, cp_proposed, cp_cohort, cp_out, cp_B,
                  cp_alpha, cp_threads);
    } else if (ab->parsed()) {
      RunConfig rc = load_run_config(aopt.config);
      apply_shared(aopt, ablate_opts, rc);
      cmd_ablate(aopt.cohort, aopt.seed, aopt.out, rc.model, rc.train, ab_B,
                 ab_alpha);
    } else if (ex->parsed()) {
      cmd_explain(ex_ckpt, ex_cohort, ex_out, ex_subjects);
    }
    return 0;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IngestError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(std::move(args));
}

}  // namespace adrisk::cli
