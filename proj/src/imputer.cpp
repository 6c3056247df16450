#include "adrisk/imputer.hpp"

#include <algorithm>
#include <array>

#include "adrisk/errors.hpp"

namespace adrisk::imputer {

using ad::Tape;
using ad::Tensor;

RitsParamRefs register_rits_params(ad::ParamStore& store, const std::string& prefix,
                                   const RitsSpec& spec, rng::Engine& eng) {
  if (spec.d <= 0 || spec.width <= 0 || spec.layers <= 0) {
    throw ConfigError("register_rits_params('" + prefix +
                          "'): d, width and layers must all be positive");
  }
  RitsParamRefs refs;
  refs.spec = spec;
  const int d = spec.d;
  const int H = spec.width;
  refs.gamma_x_W = store.add(prefix + ".gamma_x.W", ad::uniform_init(d, d, d, eng));
  refs.gamma_x_b = store.add(prefix + ".gamma_x.b", ad::uniform_init(1, d, d, eng));
  refs.gamma_h_W = store.add(prefix + ".gamma_h.W", ad::uniform_init(d, H, d, eng));
  refs.gamma_h_b = store.add(prefix + ".gamma_h.b", ad::uniform_init(1, H, d, eng));
  refs.hist_W = store.add(prefix + ".hist.W", ad::uniform_init(H, d, H, eng));
  refs.hist_b = store.add(prefix + ".hist.b", ad::uniform_init(1, d, H, eng));
  for (int l = 0; l < spec.layers; ++l) {
    const int in_dim = l == 0 ? 2 * d : H;
    const std::string base = prefix + ".l" + std::to_string(l);
    LstmLayerRefs lr;
    lr.W_ih = store.add(base + ".W_ih", ad::uniform_init(in_dim, 4 * H, in_dim, eng));
    lr.W_hh = store.add(base + ".W_hh", ad::uniform_init(H, 4 * H, H, eng));
    lr.b = store.add(base + ".b", ad::uniform_init(1, 4 * H, H, eng));
    refs.layers.push_back(lr);
  }
  return refs;
}

SeqBatch make_seq_batch(const std::vector<const prep::SeqInput*>& seqs) {
  if (seqs.empty()) throw UsageError("make_seq_batch: no sequences given");
  SeqBatch b;
  b.B = static_cast<int>(seqs.size());
  b.d = seqs[0]->d;
  for (const prep::SeqInput* s : seqs) {
    if (s == nullptr) throw UsageError("make_seq_batch: null sequence");
    if (s->T <= 0) throw UsageError("make_seq_batch: sequence with no steps");
    if (s->d != b.d) {
      throw DimensionError("make_seq_batch: feature width " +
                               std::to_string(s->d) + " != " + std::to_string(b.d));
    }
    const std::size_t need = static_cast<std::size_t>(s->T) * s->d;
    if (s->x.size() != need || s->mask.size() != need ||
        s->delta_fwd.size() != need || s->delta_bwd.size() != need) {
      throw DimensionError("make_seq_batch: sequence buffers do not match T*d");
    }
    b.lengths.push_back(s->T);
    b.C = std::max(b.C, s->T);
  }

  auto blank = [&] { return Tensor::zeros(b.B, b.d); };
  for (int t = 0; t < b.C; ++t) {
    b.x.push_back(blank());
    b.mask.push_back(blank());
    b.inv_mask.push_back(blank());
    b.delta.push_back(blank());
    b.valid.push_back(blank());
    b.x_bwd.push_back(blank());
    b.mask_bwd.push_back(blank());
    b.inv_mask_bwd.push_back(blank());
    b.delta_bwd.push_back(blank());
    b.reverse_map.emplace_back(b.B, t);
  }

  for (int s = 0; s < b.B; ++s) {
    const prep::SeqInput& in = *seqs[s];
    for (int t = 0; t < in.T; ++t) {
      const int rt = in.T - 1 - t;  // forward step feeding backward step t
      b.reverse_map[t][s] = rt;
      for (int j = 0; j < b.d; ++j) {
        const std::size_t f = static_cast<std::size_t>(t) * b.d + j;
        const std::size_t rf = static_cast<std::size_t>(rt) * b.d + j;
        b.x[t].at(s, j) = in.x[f];
        b.mask[t].at(s, j) = in.mask[f];
        b.inv_mask[t].at(s, j) = 1.0 - in.mask[f];
        b.delta[t].at(s, j) = in.delta_fwd[f];
        b.valid[t].at(s, j) = 1.0;
        b.x_bwd[t].at(s, j) = in.x[rf];
        b.mask_bwd[t].at(s, j) = in.mask[rf];
        b.inv_mask_bwd[t].at(s, j) = 1.0 - in.mask[rf];
        b.delta_bwd[t].at(s, j) = in.delta_bwd[f];
      }
    }
  }
  return b;
}

Tape::Id decay_factor(Tape& tape, Tape::Id delta, Tape::Id W, Tape::Id b) {
  return tape.map(tape.affine(delta, W, b), ad::Act::NegReluExp);
}

LstmState lstm_step(Tape& tape, Tape::Id x, LstmState state, Tape::Id W_ih,
                    Tape::Id W_hh, Tape::Id b) {
  const int H = tape.value(state.c).cols();
  const Tape::Id z = tape.add(tape.affine(x, W_ih, b), tape.matmul(state.h, W_hh));
  const Tape::Id gi = tape.map(tape.slice_cols(z, 0, H), ad::Act::Sigmoid);
  const Tape::Id gf = tape.map(tape.slice_cols(z, H, 2 * H), ad::Act::Sigmoid);
  const Tape::Id gc = tape.map(tape.slice_cols(z, 2 * H, 3 * H), ad::Act::Tanh);
  const Tape::Id go = tape.map(tape.slice_cols(z, 3 * H, 4 * H), ad::Act::Sigmoid);
  LstmState next;
  next.c = tape.add(tape.mul(gf, state.c), tape.mul(gi, gc));
  next.h = tape.mul(go, tape.map(next.c, ad::Act::Tanh));
  return next;
}

namespace {

// Stacks per-step {B,d} tensors into one {C*B,d} constant.
Tape::Id stack_constant(Tape& tape, const std::vector<Tensor>& steps) {
  const int B = steps[0].rows();
  const int d = steps[0].cols();
  Tensor out = Tensor::zeros(static_cast<int>(steps.size()) * B, d);
  std::size_t k = 0;
  for (const Tensor& t : steps) {
    for (double v : t.data) out.data[k++] = v;
  }
  return tape.constant(std::move(out));
}

}  // namespace

RitsOut rits_pass(Tape& tape, const std::vector<Tape::Id>& params,
                  const SeqBatch& batch, const RitsParamRefs& refs, bool backward) {
  if (refs.spec.d != batch.d) {
    throw DimensionError("rits_pass: parameter feature width " +
                             std::to_string(refs.spec.d) + " != batch width " +
                             std::to_string(batch.d));
  }
  if (static_cast<int>(refs.layers.size()) != refs.spec.layers) {
    throw ConfigError("rits_pass: layer refs do not match the spec");
  }
  const auto& X = backward ? batch.x_bwd : batch.x;
  const auto& M = backward ? batch.mask_bwd : batch.mask;
  const auto& IM = backward ? batch.inv_mask_bwd : batch.inv_mask;
  const auto& D = backward ? batch.delta_bwd : batch.delta;

  const Tape::Id Wgh = params[refs.gamma_h_W];
  const Tape::Id bgh = params[refs.gamma_h_b];
  const Tape::Id Wx = params[refs.hist_W];
  const Tape::Id bx = params[refs.hist_b];

  const int H = refs.spec.width;
  const int L = refs.spec.layers;
  std::vector<LstmState> state(L);
  for (int l = 0; l < L; ++l) {
    state[l].h = tape.constant(Tensor::zeros(batch.B, H));
    state[l].c = tape.constant(Tensor::zeros(batch.B, H));
  }

  RitsOut out;
  for (int t = 0; t < batch.C; ++t) {
    const Tape::Id xt = tape.constant(X[t]);
    const Tape::Id mt = tape.constant(M[t]);
    const Tape::Id imt = tape.constant(IM[t]);
    const Tape::Id dt = tape.constant(D[t]);

    const Tape::Id gamma = decay_factor(tape, dt, Wgh, bgh);
    state[0].h = tape.mul(state[0].h, gamma);
    const Tape::Id est = tape.affine(state[0].h, Wx, bx);
    const Tape::Id comp = tape.add(tape.mul(mt, xt), tape.mul(imt, est));

    Tape::Id layer_in = tape.concat_cols(std::array{comp, mt});
    for (int l = 0; l < L; ++l) {
      state[l] = lstm_step(tape, layer_in, state[l], params[refs.layers[l].W_ih],
                           params[refs.layers[l].W_hh], params[refs.layers[l].b]);
      layer_in = state[l].h;
    }
    out.estimates.push_back(est);
    out.completed.push_back(comp);
    out.hidden.push_back(state[L - 1].h);
  }
  out.imp_loss = tape.mse_masked(stack_constant(tape, X),
                                 tape.concat_rows(out.estimates),
                                 stack_constant(tape, M));
  return out;
}

RitsOut birits_impute(Tape& tape, const std::vector<Tape::Id>& params,
                      const SeqBatch& batch, const RitsParamRefs& fwd,
                      const RitsParamRefs& bwd) {
  const RitsOut f = rits_pass(tape, params, batch, fwd, false);
  const RitsOut r = rits_pass(tape, params, batch, bwd, true);

  RitsOut out;
  std::vector<Tape::Id> est_r_aligned;
  for (int t = 0; t < batch.C; ++t) {
    const Tape::Id comp_r = tape.gather_rows(r.completed, batch.reverse_map[t]);
    const Tape::Id hid_r = tape.gather_rows(r.hidden, batch.reverse_map[t]);
    const Tape::Id est_r = tape.gather_rows(r.estimates, batch.reverse_map[t]);
    out.completed.push_back(tape.scale(tape.add(f.completed[t], comp_r), 0.5));
    out.hidden.push_back(tape.scale(tape.add(f.hidden[t], hid_r), 0.5));
    out.estimates.push_back(tape.scale(tape.add(f.estimates[t], est_r), 0.5));
    est_r_aligned.push_back(est_r);
  }
  const Tape::Id consistency =
      tape.mse_masked(tape.concat_rows(f.estimates),
                      tape.concat_rows(est_r_aligned),
                      stack_constant(tape, batch.valid));
  out.imp_loss = tape.add(tape.scale(tape.add(f.imp_loss, r.imp_loss), 0.5),
                          consistency);
  return out;
}

}  // namespace adrisk::imputer
