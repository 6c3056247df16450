#include "adrisk/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adrisk/errors.hpp"

namespace adrisk::model {

using ad::Tape;
using ad::Tensor;

Mode mode_from_name(std::string_view name) {
  if (name == "hierarchical") return Mode::Hierarchical;
  if (name == "parallel_mt") return Mode::ParallelMt;
  if (name == "single_task") return Mode::SingleTask;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected hierarchical|parallel_mt|single_task)");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::Hierarchical: return "hierarchical";
    case Mode::ParallelMt: return "parallel_mt";
    case Mode::SingleTask: return "single_task";
  }
  throw ConfigError("invalid mode value");
}

int ModelConfig::embedding_dim() const {
  int e = 0;
  if (use_imaging) e += lstm_width;
  if (use_cognition) e += lstm_width;
  if (use_clinical) e += clinical_widths[1];
  return e;
}

void validate_config(const ModelConfig& c) {
  if (!c.use_imaging && !c.use_cognition && !c.use_clinical) {
    throw ConfigError("at least one modality must be active");
  }
  if (c.imaging_dim <= 0 || c.cognition_dim <= 0 || c.clinical_dim <= 0) {
    throw ConfigError("modality feature widths must be positive");
  }
  if (c.lstm_width <= 0 || c.lstm_layers <= 0) {
    throw ConfigError("recurrent stack dimensions must be positive");
  }
  if (c.head_widths.empty()) throw ConfigError("head_widths must be non-empty");
  for (int w : c.head_widths) {
    if (w <= 0) throw ConfigError("head widths must be positive");
  }
  if (c.clinical_widths[0] <= 0 || c.clinical_widths[1] <= 0) {
    throw ConfigError("clinical branch widths must be positive");
  }
  if (c.dropout < 0.0 || c.dropout >= 1.0) {
    throw ConfigError("dropout must be in [0,1)");
  }
  if (c.mode == Mode::SingleTask) {
    if (c.single_task_target != kProgressionTarget &&
        (c.single_task_target < 0 || c.single_task_target > 3)) {
      throw ConfigError("single_task_target must be progression (-1) or a "
                        "composite domain 0..3");
    }
  } else if (c.single_task_target != kProgressionTarget) {
    throw ConfigError("single_task_target is only valid in single_task mode");
  }
}

namespace {

DenseRefs register_dense(ad::ParamStore& store, const std::string& prefix,
                         int in_dim, int out_dim, rng::Engine& eng) {
  DenseRefs r;
  r.W = store.add(prefix + ".W", ad::uniform_init(in_dim, out_dim, in_dim, eng));
  r.b = store.add(prefix + ".b", ad::uniform_init(1, out_dim, in_dim, eng));
  return r;
}

HeadRefs register_head(ad::ParamStore& store, const std::string& prefix, int in_dim,
                       const std::vector<int>& widths, int out_dim,
                       rng::Engine& eng) {
  HeadRefs h;
  int prev = in_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    h.hidden.push_back(register_dense(store, prefix + ".l" + std::to_string(i),
                                      prev, widths[i], eng));
    prev = widths[i];
  }
  h.out = register_dense(store, prefix + ".out", prev, out_dim, eng);
  return h;
}

// Hidden tanh layers with dropout on the activations in train mode, then a
// sigmoid output layer.
Tape::Id head_forward(Tape& tape, const std::vector<Tape::Id>& params,
                      const HeadRefs& refs, Tape::Id x, double rate, bool train,
                      rng::Engine* eng) {
  Tape::Id cur = x;
  for (const DenseRefs& layer : refs.hidden) {
    cur = tape.map(tape.affine(cur, params[layer.W], params[layer.b]), ad::Act::Tanh);
    if (train && rate > 0.0) cur = tape.dropout(cur, rate, true, *eng);
  }
  return tape.map(tape.affine(cur, params[refs.out.W], params[refs.out.b]),
                  ad::Act::Sigmoid);
}

}  // namespace

ModelParams init_model(const ModelConfig& config) {
  validate_config(config);
  ModelParams mp;
  mp.config = config;
  auto eng = rng::make_engine(config.seed, "model-init");

  if (config.use_imaging) {
    const imputer::RitsSpec spec{config.imaging_dim, config.lstm_width,
                                 config.lstm_layers};
    mp.img_fwd = imputer::register_rits_params(mp.store, "imaging.fwd", spec, eng);
    mp.img_bwd = imputer::register_rits_params(mp.store, "imaging.bwd", spec, eng);
  }
  if (config.use_cognition) {
    const imputer::RitsSpec spec{config.cognition_dim, config.lstm_width,
                                 config.lstm_layers};
    mp.cog_fwd = imputer::register_rits_params(mp.store, "cognition.fwd", spec, eng);
    mp.cog_bwd = imputer::register_rits_params(mp.store, "cognition.bwd", spec, eng);
  }
  if (config.use_clinical) {
    mp.clin1 = register_dense(mp.store, "clinical.l0", config.clinical_dim,
                              config.clinical_widths[0], eng);
    mp.clin2 = register_dense(mp.store, "clinical.l1", config.clinical_widths[0],
                              config.clinical_widths[1], eng);
  }

  const int E = config.embedding_dim();
  switch (config.mode) {
    case Mode::Hierarchical:
      mp.aux_head = register_head(mp.store, "aux", E, config.head_widths, 4, eng);
      mp.rel_head = register_head(mp.store, "relevance", E, config.head_widths, 4, eng);
      mp.main_head = register_dense(mp.store, "main", 4, 1, eng);
      break;
    case Mode::ParallelMt:
      mp.aux_head = register_head(mp.store, "aux", E, config.head_widths, 4, eng);
      mp.par_main = register_head(mp.store, "main", E, config.head_widths, 1, eng);
      break;
    case Mode::SingleTask:
      mp.single = register_head(mp.store, "single", E, config.head_widths, 1, eng);
      break;
  }
  return mp;
}

Batch make_batch(const std::vector<const prep::ModelInput*>& subjects,
                 const ModelConfig& config) {
  if (subjects.empty()) throw UsageError("make_batch: no subjects given");
  Batch b;
  b.B = static_cast<int>(subjects.size());
  for (const prep::ModelInput* s : subjects) {
    if (s == nullptr) throw UsageError("make_batch: null subject");
    if (s->T <= 0) throw UsageError("make_batch: subject with no visits");
    b.lengths.push_back(s->T);
    b.subject_ids.push_back(s->subject_id);
    b.C = std::max(b.C, s->T);
  }

  if (config.use_imaging) {
    std::vector<const prep::SeqInput*> seqs;
    for (const prep::ModelInput* s : subjects) seqs.push_back(&s->imaging);
    b.imaging = imputer::make_seq_batch(seqs);
    if (b.imaging.d != config.imaging_dim) {
      throw DimensionError("make_batch: imaging width " +
                           std::to_string(b.imaging.d) + " != configured " +
                           std::to_string(config.imaging_dim));
    }
  }
  if (config.use_cognition) {
    std::vector<const prep::SeqInput*> seqs;
    for (const prep::ModelInput* s : subjects) seqs.push_back(&s->cognition);
    b.cognition = imputer::make_seq_batch(seqs);
    if (b.cognition.d != config.cognition_dim) {
      throw DimensionError("make_batch: cognition width " +
                           std::to_string(b.cognition.d) + " != configured " +
                           std::to_string(config.cognition_dim));
    }
  }
  if (config.use_clinical) {
    b.clinical = Tensor::zeros(b.B, config.clinical_dim);
    for (int s = 0; s < b.B; ++s) {
      const auto& vec = subjects[s]->clinical;
      if (static_cast<int>(vec.size()) != config.clinical_dim) {
        throw DimensionError("make_batch: clinical vector of subject '" +
                             subjects[s]->subject_id + "' has width " +
                             std::to_string(vec.size()) + ", expected " +
                             std::to_string(config.clinical_dim));
      }
      for (int j = 0; j < config.clinical_dim; ++j) b.clinical.at(s, j) = vec[j];
    }
  }

  for (int t = 0; t < b.C; ++t) {
    b.y.push_back(Tensor::zeros(b.B, 1));
    b.y_mask.push_back(Tensor::zeros(b.B, 1));
    b.aux_targets.push_back(Tensor::zeros(b.B, 4));
    b.aux_mask.push_back(Tensor::zeros(b.B, 4));
  }
  for (int s = 0; s < b.B; ++s) {
    const prep::ModelInput& in = *subjects[s];
    for (int t = 0; t < in.T; ++t) {
      b.y[t].at(s, 0) = in.labels.y[t];
      b.y_mask[t].at(s, 0) = in.labels.y_mask[t] ? 1.0 : 0.0;
      for (int c = 0; c < 4; ++c) {
        b.aux_targets[t].at(s, c) = in.aux_targets_unit[t][c];
        b.aux_mask[t].at(s, c) = in.labels.aux_mask[t][c] ? 1.0 : 0.0;
      }
    }
  }
  return b;
}

Tape::Id embed_clinical(Tape& tape, const std::vector<Tape::Id>& params,
                        Tape::Id x, const ModelParams& mp) {
  const Tape::Id h1 = tape.map(
      tape.affine(x, params[mp.clin1.W], params[mp.clin1.b]), ad::Act::Tanh);
  return tape.map(tape.affine(h1, params[mp.clin2.W], params[mp.clin2.b]),
                  ad::Act::Tanh);
}

Tape::Id joint_embedding(Tape& tape, std::optional<Tape::Id> imaging,
                         std::optional<Tape::Id> cognition,
                         std::optional<Tape::Id> clinical,
                         const ModelConfig& config) {
  auto expect = [](bool active, const std::optional<Tape::Id>& branch,
                   const char* name) {
    if (active && !branch) {
      throw ConfigError(std::string("joint_embedding: active modality '") + name +
                        "' has no branch input");
    }
    if (!active && branch) {
      throw ConfigError(std::string("joint_embedding: inactive modality '") + name +
                        "' was supplied");
    }
  };
  expect(config.use_imaging, imaging, "imaging");
  expect(config.use_cognition, cognition, "cognition");
  expect(config.use_clinical, clinical, "clinical");

  std::vector<Tape::Id> parts;
  if (imaging) parts.push_back(*imaging);
  if (cognition) parts.push_back(*cognition);
  if (clinical) parts.push_back(*clinical);
  if (parts.size() == 1) return parts[0];
  return tape.concat_cols(parts);
}

Tape::Id main_head(Tape& tape, const std::vector<Tape::Id>& params,
                   Tape::Id s_hat, Tape::Id r, const ModelParams& mp) {
  if (mp.config.mode != Mode::Hierarchical) {
    throw UsageError("main_head is only defined in hierarchical mode");
  }
  return tape.map(tape.affine(tape.mul(s_hat, r), params[mp.main_head.W],
                              params[mp.main_head.b]),
                  ad::Act::Sigmoid);
}

double risk_from_aux(const ModelParams& mp, const std::array<double, 4>& s,
                     const std::array<double, 4>& r) {
  if (mp.config.mode != Mode::Hierarchical) {
    throw UsageError("risk_from_aux is only defined in hierarchical mode");
  }
  const Tensor& W = mp.store.values[mp.main_head.W];
  const Tensor& b = mp.store.values[mp.main_head.b];
  double z = b.data[0];
  for (int c = 0; c < 4; ++c) z += s[c] * r[c] * W.at(c, 0);
  return 1.0 / (1.0 + std::exp(-z));
}

ForwardOut forward_batch(Tape& tape, const std::vector<Tape::Id>& params,
                         const ModelParams& mp, const Batch& batch, bool train,
                         rng::Engine* dropout_eng) {
  const ModelConfig& cfg = mp.config;
  if (train && cfg.dropout > 0.0 && dropout_eng == nullptr) {
    throw UsageError("training forward needs a dropout stream");
  }
  if (cfg.use_imaging && batch.imaging.B != batch.B) {
    throw ConfigError("forward_batch: imaging is active but the batch has no "
                      "imaging stream");
  }
  if (cfg.use_cognition && batch.cognition.B != batch.B) {
    throw ConfigError("forward_batch: cognition is active but the batch has no "
                      "cognition stream");
  }
  if (cfg.use_clinical && batch.clinical.rows() != batch.B) {
    throw ConfigError("forward_batch: clinical is active but the batch has no "
                      "clinical block");
  }

  imputer::RitsOut img, cog;
  std::vector<Tape::Id> losses;
  if (cfg.use_imaging) {
    img = imputer::birits_impute(tape, params, batch.imaging, mp.img_fwd, mp.img_bwd);
    losses.push_back(img.imp_loss);
  }
  if (cfg.use_cognition) {
    cog = imputer::birits_impute(tape, params, batch.cognition, mp.cog_fwd,
                                 mp.cog_bwd);
    losses.push_back(cog.imp_loss);
  }
  Tape::Id clin = -1;
  if (cfg.use_clinical) {
    clin = embed_clinical(tape, params, tape.constant(batch.clinical), mp);
  }

  ForwardOut out;
  out.imp_loss = tape.constant(Tensor::scalar(0.0));
  for (Tape::Id l : losses) out.imp_loss = tape.add(out.imp_loss, l);

  for (int t = 0; t < batch.C; ++t) {
    const Tape::Id joint = joint_embedding(
        tape,
        cfg.use_imaging ? std::optional<Tape::Id>(img.hidden[t]) : std::nullopt,
        cfg.use_cognition ? std::optional<Tape::Id>(cog.hidden[t]) : std::nullopt,
        cfg.use_clinical ? std::optional<Tape::Id>(clin) : std::nullopt, cfg);

    switch (cfg.mode) {
      case Mode::Hierarchical: {
        const Tape::Id s = head_forward(tape, params, mp.aux_head, joint,
                                        cfg.dropout, train, dropout_eng);
        const Tape::Id r = head_forward(tape, params, mp.rel_head, joint,
                                        cfg.dropout, train, dropout_eng);
        out.aux.push_back(s);
        out.rel.push_back(r);
        out.risk.push_back(main_head(tape, params, s, r, mp));
        break;
      }
      case Mode::ParallelMt: {
        out.aux.push_back(head_forward(tape, params, mp.aux_head, joint,
                                       cfg.dropout, train, dropout_eng));
        out.risk.push_back(head_forward(tape, params, mp.par_main, joint,
                                        cfg.dropout, train, dropout_eng));
        break;
      }
      case Mode::SingleTask: {
        const Tape::Id p = head_forward(tape, params, mp.single, joint,
                                        cfg.dropout, train, dropout_eng);
        if (cfg.single_task_target == kProgressionTarget) {
          out.risk.push_back(p);
        } else {
          out.aux.push_back(p);
        }
        break;
      }
    }
  }
  return out;
}

SubjectForward forward_subject(const prep::ModelInput& input, const ModelParams& mp) {
  const Batch batch = make_batch({&input}, mp.config);
  ad::Tape tape;
  const auto ids = ad::attach_params(tape, mp.store);
  const ForwardOut fo = forward_batch(tape, ids, mp, batch, /*train=*/false);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  SubjectForward sf;
  sf.imp_loss = tape.value(fo.imp_loss).scalar_value();
  for (int t = 0; t < input.T; ++t) {
    TimestepOutput step;
    step.risk = fo.risk.empty() ? nan : tape.value(fo.risk[t]).at(0, 0);
    step.aux.fill(nan);
    step.relevance.fill(nan);
    if (!fo.aux.empty()) {
      const Tensor& a = tape.value(fo.aux[t]);
      if (a.cols() == 4) {
        for (int c = 0; c < 4; ++c) step.aux[c] = a.at(0, c);
      } else {
        step.aux[mp.config.single_task_target] = a.at(0, 0);
      }
    }
    if (!fo.rel.empty()) {
      const Tensor& r = tape.value(fo.rel[t]);
      for (int c = 0; c < 4; ++c) step.relevance[c] = r.at(0, c);
    }
    sf.steps.push_back(step);
  }
  return sf;
}

}  // namespace adrisk::model
