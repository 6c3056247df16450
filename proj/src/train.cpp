#include "adrisk/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "adrisk/errors.hpp"
#include "adrisk/log.hpp"
#include "json.hpp"

namespace adrisk::train {

using ad::Tape;
using ad::Tensor;
using nlohmann::json;

void validate_weights(const LossWeights& w) {
  if (w.lambda_main < 0.0 || w.lambda_aux < 0.0 || w.lambda_imp < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (w.lambda_main == 0.0 && w.lambda_aux == 0.0 && w.lambda_imp == 0.0) {
    throw ConfigError("at least one loss weight must be positive");
  }
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.early_stop_patience < 0) {
    throw ConfigError("early_stop_patience must be >= 0");
  }
  validate_weights(cfg.weights);
}

namespace {

// Stacks per-step {B,c} tensors into one {C*B,c} constant.
Tape::Id stack_constant(Tape& tape, const std::vector<Tensor>& steps) {
  const int B = steps[0].rows();
  const int c = steps[0].cols();
  Tensor out = Tensor::zeros(static_cast<int>(steps.size()) * B, c);
  std::size_t k = 0;
  for (const Tensor& t : steps) {
    for (double v : t.data) out.data[k++] = v;
  }
  return tape.constant(std::move(out));
}

Tape::Id stack_constant_col(Tape& tape, const std::vector<Tensor>& steps, int col) {
  const int B = steps[0].rows();
  Tensor out = Tensor::zeros(static_cast<int>(steps.size()) * B, 1);
  std::size_t k = 0;
  for (const Tensor& t : steps) {
    for (int s = 0; s < B; ++s) out.data[k++] = t.at(s, col);
  }
  return tape.constant(std::move(out));
}

}  // namespace

LossParts joint_loss(Tape& tape, const model::ForwardOut& out,
                     const model::Batch& batch, const LossWeights& weights,
                     int composite_target) {
  validate_weights(weights);
  const std::size_t steps = batch.y.size();
  if (!out.risk.empty() && out.risk.size() != steps) {
    throw DimensionError("joint_loss: " + std::to_string(out.risk.size()) +
                         " risk steps for " + std::to_string(steps) +
                         " label steps");
  }
  if (!out.aux.empty() && out.aux.size() != steps) {
    throw DimensionError("joint_loss: " + std::to_string(out.aux.size()) +
                         " auxiliary steps for " + std::to_string(steps) +
                         " label steps");
  }

  LossParts parts;
  if (out.risk.empty()) {
    parts.main = tape.constant(Tensor::scalar(0.0));
  } else {
    parts.main = tape.bce_masked(tape.concat_rows(out.risk),
                                 stack_constant(tape, batch.y),
                                 stack_constant(tape, batch.y_mask));
  }

  if (out.aux.empty()) {
    parts.aux = tape.constant(Tensor::scalar(0.0));
  } else {
    const Tape::Id pred = tape.concat_rows(out.aux);
    const int cols = tape.value(pred).cols();
    if (cols == 4) {
      parts.aux = tape.constant(Tensor::scalar(0.0));
      for (int c = 0; c < 4; ++c) {
        const Tape::Id term =
            tape.mse_masked(tape.slice_cols(pred, c, c + 1),
                            stack_constant_col(tape, batch.aux_targets, c),
                            stack_constant_col(tape, batch.aux_mask, c));
        parts.aux = tape.add(parts.aux, term);
      }
    } else if (cols == 1) {
      if (composite_target < 0 || composite_target > 3) {
        throw UsageError("joint_loss: single-column auxiliary output needs the "
                         "scored composite domain");
      }
      parts.aux = tape.mse_masked(
          pred, stack_constant_col(tape, batch.aux_targets, composite_target),
          stack_constant_col(tape, batch.aux_mask, composite_target));
    } else {
      throw DimensionError("joint_loss: auxiliary output has " +
                           std::to_string(cols) + " columns, expected 1 or 4");
    }
  }

  parts.imp = out.imp_loss;
  parts.total = tape.add(
      tape.add(tape.scale(parts.main, weights.lambda_main),
               tape.scale(parts.aux, weights.lambda_aux)),
      tape.scale(parts.imp, weights.lambda_imp));
  return parts;
}

namespace {

struct LossSums {
  double total = 0, main = 0, aux = 0, imp = 0;
  int weight = 0;

  void add(Tape& tape, const LossParts& parts, int w) {
    total += tape.value(parts.total).scalar_value() * w;
    main += tape.value(parts.main).scalar_value() * w;
    aux += tape.value(parts.aux).scalar_value() * w;
    imp += tape.value(parts.imp).scalar_value() * w;
    weight += w;
  }
};

std::vector<std::vector<const prep::ModelInput*>> chunked(
    const std::vector<prep::ModelInput>& subjects, const std::vector<int>& order,
    int batch_size) {
  std::vector<std::vector<const prep::ModelInput*>> chunks;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    std::vector<const prep::ModelInput*> chunk;
    for (std::size_t k = i; k < std::min(i + batch_size, order.size()); ++k) {
      chunk.push_back(&subjects[order[k]]);
    }
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

}  // namespace

EpochStats eval_loss(const std::vector<prep::ModelInput>& subjects,
                     const model::ModelParams& params, const LossWeights& weights,
                     int batch_size) {
  if (subjects.empty()) throw UsageError("eval_loss: no subjects");
  std::vector<int> order(subjects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  LossSums sums;
  for (const auto& chunk : chunked(subjects, order, batch_size)) {
    const model::Batch batch = model::make_batch(chunk, params.config);
    Tape tape;
    const auto ids = ad::attach_params(tape, params.store);
    const auto out = model::forward_batch(tape, ids, params, batch, false);
    sums.add(tape,
             joint_loss(tape, out, batch, weights,
                        params.config.single_task_target),
             static_cast<int>(chunk.size()));
  }
  EpochStats s;
  s.val_total = sums.total / sums.weight;
  s.val_main = sums.main / sums.weight;
  s.val_aux = sums.aux / sums.weight;
  s.val_imp = sums.imp / sums.weight;
  return s;
}

TrainResult train_model(const std::vector<prep::ModelInput>& train_set,
                        const std::vector<prep::ModelInput>& val_set,
                        const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                        const EpochHook& after_epoch) {
  validate_train_config(tcfg);
  if (train_set.empty()) throw ConfigError("train_model: empty training split");
  if (tcfg.early_stop_patience > 0 && val_set.empty()) {
    throw ConfigError("train_model: early stopping needs a validation split");
  }

  TrainResult result;
  result.params = model::init_model(mcfg);
  ad::AdamState adam = ad::AdamState::init(result.params.store, tcfg.adam);

  model::ModelParams best = result.params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 1, since_best = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    std::vector<int> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    auto shuffle_eng = rng::make_engine(tcfg.seed, "batch-order", epoch);
    rng::shuffle(order, shuffle_eng);

    LossSums sums;
    int batch_index = 0;
    for (const auto& chunk : chunked(train_set, order, tcfg.batch_size)) {
      const model::Batch batch = model::make_batch(chunk, mcfg);
      Tape tape;
      const auto ids = ad::attach_params(tape, result.params.store);
      auto deng = rng::make_engine(
          tcfg.seed, "dropout",
          static_cast<std::uint64_t>(epoch) * 1000003ULL + batch_index);
      const auto out =
          model::forward_batch(tape, ids, result.params, batch, true, &deng);
      const LossParts parts =
          joint_loss(tape, out, batch, tcfg.weights, mcfg.single_task_target);
      tape.backward(parts.total);
      std::vector<Tensor> grads;
      grads.reserve(ids.size());
      for (const auto id : ids) grads.push_back(tape.grad(id));
      ad::adam_step(result.params.store, grads, adam);
      sums.add(tape, parts, static_cast<int>(chunk.size()));
      ++batch_index;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_total = sums.total / sums.weight;
    stats.train_main = sums.main / sums.weight;
    stats.train_aux = sums.aux / sums.weight;
    stats.train_imp = sums.imp / sums.weight;
    if (val_set.empty()) {
      stats.val_total = stats.val_main = stats.val_aux = stats.val_imp = nan;
    } else {
      const EpochStats v =
          eval_loss(val_set, result.params, tcfg.weights, tcfg.batch_size);
      stats.val_total = v.val_total;
      stats.val_main = v.val_main;
      stats.val_aux = v.val_aux;
      stats.val_imp = v.val_imp;
    }
    result.history.push_back(stats);
    result.last_epoch = epoch;

    if (tcfg.early_stop_patience > 0) {
      if (stats.val_total < best_val) {
        best_val = stats.val_total;
        best = result.params;
        best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= tcfg.early_stop_patience) {
        log_info("early stop at epoch " + std::to_string(epoch) +
                 " (best validation at epoch " + std::to_string(best_epoch) + ")");
        break;
      }
    }
    if (after_epoch && !after_epoch(stats, result.params)) break;
  }

  if (tcfg.early_stop_patience > 0) {
    result.params = std::move(best);
    result.best_epoch = best_epoch;
  } else {
    result.best_epoch = result.last_epoch;
  }
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json config_to_json(const model::ModelConfig& c) {
  json j;
  j["use_imaging"] = c.use_imaging;
  j["use_cognition"] = c.use_cognition;
  j["use_clinical"] = c.use_clinical;
  j["mode"] = model::mode_name(c.mode);
  j["single_task_target"] = c.single_task_target;
  j["imaging_dim"] = c.imaging_dim;
  j["cognition_dim"] = c.cognition_dim;
  j["clinical_dim"] = c.clinical_dim;
  j["lstm_width"] = c.lstm_width;
  j["lstm_layers"] = c.lstm_layers;
  j["head_widths"] = c.head_widths;
  j["clinical_widths"] = c.clinical_widths;
  j["dropout"] = c.dropout;
  j["seed"] = c.seed;
  return j;
}

model::ModelConfig config_from_json(const json& j) {
  model::ModelConfig c;
  c.use_imaging = j.at("use_imaging").get<bool>();
  c.use_cognition = j.at("use_cognition").get<bool>();
  c.use_clinical = j.at("use_clinical").get<bool>();
  c.mode = model::mode_from_name(j.at("mode").get<std::string>());
  c.single_task_target = j.at("single_task_target").get<int>();
  c.imaging_dim = j.at("imaging_dim").get<int>();
  c.cognition_dim = j.at("cognition_dim").get<int>();
  c.clinical_dim = j.at("clinical_dim").get<int>();
  c.lstm_width = j.at("lstm_width").get<int>();
  c.lstm_layers = j.at("lstm_layers").get<int>();
  c.head_widths = j.at("head_widths").get<std::vector<int>>();
  c.clinical_widths = j.at("clinical_widths").get<std::array<int, 2>>();
  c.dropout = j.at("dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void write_history(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  out << "epoch,train_total,train_main,train_aux,train_imp,"
         "val_total,val_main,val_aux,val_imp\n";
  for (const EpochStats& s : history) {
    out << s.epoch << ',' << fmt(s.train_total) << ',' << fmt(s.train_main) << ','
        << fmt(s.train_aux) << ',' << fmt(s.train_imp) << ',' << fmt(s.val_total)
        << ',' << fmt(s.val_main) << ',' << fmt(s.val_aux) << ','
        << fmt(s.val_imp) << '\n';
  }
}

void save_checkpoint(const model::ModelParams& params,
                     const prep::ScalerParams& scaler, std::uint64_t seed,
                     const std::string& path) {
  json j;
  j["version"] = kCheckpointVersion;
  j["seed"] = seed;
  j["config"] = config_to_json(params.config);
  j["scaler"] = {{"p1", scaler.p1},
                 {"p99", scaler.p99},
                 {"lo", scaler.lo},
                 {"hi", scaler.hi},
                 {"fingerprint", scaler.fingerprint}};
  json tensors = json::object();
  for (std::size_t i = 0; i < params.store.count(); ++i) {
    const Tensor& t = params.store.values[i];
    tensors[params.store.names[i]] = {{"shape", t.shape}, {"data", t.data}};
  }
  j["tensors"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  out << j.dump();
  out.close();
  if (!out) throw UsageError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IngestError("checkpoint '" + path + "' is not readable: " + e.what());
  }

  try {
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ConfigError("checkpoint '" + path + "' has version " +
                        std::to_string(version) + ", this build reads version " +
                        std::to_string(kCheckpointVersion));
    }
    Checkpoint ck;
    ck.seed = j.at("seed").get<std::uint64_t>();
    ck.params = model::init_model(config_from_json(j.at("config")));
    const json& sc = j.at("scaler");
    ck.scaler.p1 = sc.at("p1").get<std::vector<double>>();
    ck.scaler.p99 = sc.at("p99").get<std::vector<double>>();
    ck.scaler.lo = sc.at("lo").get<std::vector<double>>();
    ck.scaler.hi = sc.at("hi").get<std::vector<double>>();
    ck.scaler.fingerprint = sc.at("fingerprint").get<std::string>();

    const json& tensors = j.at("tensors");
    if (tensors.size() != ck.params.store.count()) {
      throw IngestError("checkpoint '" + path + "' carries " +
                        std::to_string(tensors.size()) + " tensors, the stored "
                        "config needs " + std::to_string(ck.params.store.count()));
    }
    for (std::size_t i = 0; i < ck.params.store.count(); ++i) {
      const std::string& name = ck.params.store.names[i];
      if (!tensors.contains(name)) {
        throw IngestError("checkpoint '" + path + "' is missing tensor '" + name +
                          "'");
      }
      const json& entry = tensors.at(name);
      const auto shape = entry.at("shape").get<std::vector<int>>();
      Tensor& dst = ck.params.store.values[i];
      if (shape != dst.shape) {
        throw IngestError("checkpoint tensor '" + name + "' has the wrong shape");
      }
      const auto data = entry.at("data").get<std::vector<double>>();
      if (data.size() != dst.data.size()) {
        throw IngestError("checkpoint tensor '" + name + "' has the wrong size");
      }
      dst.data = data;
    }
    return ck;
  } catch (const json::exception& e) {
    throw IngestError("checkpoint '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace adrisk::train
