#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adrisk/adam.hpp"
#include "adrisk/model.hpp"
#include "adrisk/preprocess.hpp"

namespace adrisk::train {

// Weights of the three objective terms: progression BCE, the summed
// per-domain auxiliary MSEs, and the imputation losses.
struct LossWeights {
  double lambda_main = 1.0;
  double lambda_aux = 0.8;
  double lambda_imp = 0.05;
};

void validate_weights(const LossWeights& w);  // ConfigError on violations

struct TrainConfig {
  int epochs = 500;
  int batch_size = 128;
  LossWeights weights;
  ad::AdamConfig adam;
  std::uint64_t seed = 0;
  // 0 disables early stopping; > 0 stops after that many epochs without a
  // validation-loss improvement and returns the best-validation parameters.
  int early_stop_patience = 0;
};

void validate_train_config(const TrainConfig& cfg);

struct LossParts {
  ad::Tape::Id total = -1;  // weighted sum
  ad::Tape::Id main = -1;   // raw masked BCE
  ad::Tape::Id aux = -1;    // raw sum of per-domain masked MSEs
  ad::Tape::Id imp = -1;    // raw summed imputation losses
};

// composite_target names the scored domain when the forward pass produced a
// single-column auxiliary head (composite single-task mode); four-column
// auxiliary outputs ignore it.
LossParts joint_loss(ad::Tape& tape, const model::ForwardOut& out,
                     const model::Batch& batch, const LossWeights& weights,
                     int composite_target = model::kProgressionTarget);

// Component values are the raw (unweighted) terms; totals carry the weights.
// Validation fields are NaN when no validation split was given.
struct EpochStats {
  int epoch = 0;
  double train_total = 0, train_main = 0, train_aux = 0, train_imp = 0;
  double val_total = 0, val_main = 0, val_aux = 0, val_imp = 0;
};

// Runs after each epoch; returning false stops training at that epoch.
using EpochHook = std::function<bool(const EpochStats&, const model::ModelParams&)>;

struct TrainResult {
  model::ModelParams params;
  std::vector<EpochStats> history;
  int last_epoch = 0;  // last epoch that actually ran
  int best_epoch = 0;  // epoch whose parameters are returned
};

TrainResult train_model(const std::vector<prep::ModelInput>& train_set,
                        const std::vector<prep::ModelInput>& val_set,
                        const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                        const EpochHook& after_epoch = {});

// Average loss of a parameter set over a subject list, eval mode.
EpochStats eval_loss(const std::vector<prep::ModelInput>& subjects,
                     const model::ModelParams& params, const LossWeights& weights,
                     int batch_size);

// epoch,train_total,...,val_imp as comma-separated text for plotting.
void write_history(const std::vector<EpochStats>& history, const std::string& path);

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  model::ModelParams params;
  prep::ScalerParams scaler;
  std::uint64_t seed = 0;
};

// JSON checkpoint carrying the config, every parameter tensor with exact
// double round-trip, the fitted scaler, and the run seed.
void save_checkpoint(const model::ModelParams& params,
                     const prep::ScalerParams& scaler, std::uint64_t seed,
                     const std::string& path);

// ConfigError on version mismatch; IngestError on parse failures or on a
// tensor set that does not match the stored config.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace adrisk::train
