#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adrisk/imputer.hpp"
#include "adrisk/params.hpp"
#include "adrisk/preprocess.hpp"
#include "adrisk/rng.hpp"
#include "adrisk/tape.hpp"

namespace adrisk::model {

// hierarchical: auxiliary scores and relevance weights gate the risk head.
// parallel_mt: auxiliary and risk heads read the joint embedding
// independently. single_task: a single head for one configured target.
enum class Mode { Hierarchical, ParallelMt, SingleTask };

Mode mode_from_name(std::string_view name);  // ConfigError on unknown names
std::string mode_name(Mode mode);

inline constexpr int kProgressionTarget = -1;

struct ModelConfig {
  bool use_imaging = true;
  bool use_cognition = true;
  bool use_clinical = true;
  Mode mode = Mode::Hierarchical;
  // kProgressionTarget or a composite domain 0..3; single_task mode only
  int single_task_target = kProgressionTarget;
  int imaging_dim = 90;
  int cognition_dim = 13;
  int clinical_dim = 18;
  int lstm_width = 128;
  int lstm_layers = 3;
  std::vector<int> head_widths{256, 12, 64};
  std::array<int, 2> clinical_widths{64, 64};
  double dropout = 0.5;
  std::uint64_t seed = 0;

  int embedding_dim() const;
};

void validate_config(const ModelConfig& config);  // ConfigError on violations

struct DenseRefs {
  int W = -1, b = -1;
};
struct HeadRefs {
  std::vector<DenseRefs> hidden;
  DenseRefs out;
};

// Registered parameter set for one configuration. Only the branches and
// heads the configuration actually uses are present in the store.
struct ModelParams {
  ModelConfig config;
  ad::ParamStore store;
  imputer::RitsParamRefs img_fwd, img_bwd, cog_fwd, cog_bwd;
  DenseRefs clin1, clin2;
  HeadRefs aux_head;    // hierarchical and parallel_mt
  HeadRefs rel_head;    // hierarchical only
  DenseRefs main_head;  // hierarchical only: 4 -> 1 on s*r
  HeadRefs par_main;    // parallel_mt only: embedding -> 1
  HeadRefs single;      // single_task only: embedding -> 1
};

ModelParams init_model(const ModelConfig& config);

// Padded subject batch: one {B,*} tensor per timestep, masks false on
// padding so padded steps cannot touch any loss term.
struct Batch {
  int B = 0, C = 0;
  std::vector<int> lengths;
  std::vector<std::string> subject_ids;
  imputer::SeqBatch imaging, cognition;  // populated for active modalities
  ad::Tensor clinical;                   // {B, clinical_dim} when active
  std::vector<ad::Tensor> y, y_mask;            // {B,1} per step
  std::vector<ad::Tensor> aux_targets, aux_mask;  // {B,4} per step, unit scale
};

Batch make_batch(const std::vector<const prep::ModelInput*>& subjects,
                 const ModelConfig& config);

struct ForwardOut {
  std::vector<ad::Tape::Id> risk;  // {B,1} per step; empty for composite-only
  std::vector<ad::Tape::Id> aux;   // {B,4} per step ({B,1} composite target)
  std::vector<ad::Tape::Id> rel;   // {B,4} per step, hierarchical only
  ad::Tape::Id imp_loss = -1;      // scalar; 0 without recurrent branches
};

// Two tanh dense layers, then the same row for every timestep downstream.
ad::Tape::Id embed_clinical(ad::Tape& tape, const std::vector<ad::Tape::Id>& params,
                            ad::Tape::Id x, const ModelParams& mp);

// Concatenates the supplied branches in the fixed order imaging, cognition,
// clinical. A branch must be supplied iff its modality is active.
ad::Tape::Id joint_embedding(ad::Tape& tape, std::optional<ad::Tape::Id> imaging,
                             std::optional<ad::Tape::Id> cognition,
                             std::optional<ad::Tape::Id> clinical,
                             const ModelConfig& config);

// p = sigmoid(w . (s*r) + b); the hierarchy bottleneck. UsageError outside
// hierarchical mode.
ad::Tape::Id main_head(ad::Tape& tape, const std::vector<ad::Tape::Id>& params,
                       ad::Tape::Id s_hat, ad::Tape::Id r, const ModelParams& mp);

// Same arithmetic on plain doubles, for replaying exported (s, r) pairs.
double risk_from_aux(const ModelParams& mp, const std::array<double, 4>& s,
                     const std::array<double, 4>& r);

// Full forward pass over a batch. Train mode applies dropout inside the
// heads and requires an engine when the configured rate is nonzero.
ForwardOut forward_batch(ad::Tape& tape, const std::vector<ad::Tape::Id>& params,
                         const ModelParams& mp, const Batch& batch, bool train,
                         rng::Engine* dropout_eng = nullptr);

// Per-visit outputs for one subject in eval mode. Fields a mode does not
// produce are NaN (relevance outside hierarchical mode, risk for a composite
// single-task target, aux for the progression single-task target).
struct TimestepOutput {
  double risk = 0.0;
  std::array<double, 4> aux{};
  std::array<double, 4> relevance{};
};

struct SubjectForward {
  std::vector<TimestepOutput> steps;
  double imp_loss = 0.0;
};

SubjectForward forward_subject(const prep::ModelInput& input, const ModelParams& mp);

}  // namespace adrisk::model
