#pragma once

#include <string>
#include <vector>

#include "adrisk/params.hpp"
#include "adrisk/preprocess.hpp"
#include "adrisk/rng.hpp"
#include "adrisk/tape.hpp"

namespace adrisk::imputer {

// Stacked recurrent imputer over one feature stream. Each direction owns a
// temporal-decay pair for the hidden state, a history-regression head that
// estimates the current feature vector from the decayed hidden state, and a
// stack of LSTM layers whose first layer consumes [completed features, mask].
struct RitsSpec {
  int d = 0;          // feature width of the stream
  int width = 128;    // hidden units per layer
  int layers = 3;
};

struct LstmLayerRefs {
  int W_ih = -1;  // {input_dim, 4*width}, gate order [in, forget, cand, out]
  int W_hh = -1;  // {width, 4*width}
  int b = -1;     // {1, 4*width}
};

// Store indices for one direction's parameters. The input-decay pair is
// registered so checkpoints carry the full parameter set, but the update
// path regresses estimates from the decayed hidden state only, so those two
// tensors never enter the graph and keep zero gradients.
struct RitsParamRefs {
  RitsSpec spec;
  int gamma_x_W = -1;  // {d, d}      (registered, unused by the forward pass)
  int gamma_x_b = -1;  // {1, d}
  int gamma_h_W = -1;  // {d, width}
  int gamma_h_b = -1;  // {1, width}
  int hist_W = -1;     // {width, d}
  int hist_b = -1;     // {1, d}
  std::vector<LstmLayerRefs> layers;
};

RitsParamRefs register_rits_params(ad::ParamStore& store, const std::string& prefix,
                                   const RitsSpec& spec, rng::Engine& eng);

// Padded batch of sequences for one stream, laid out as one {B,d} tensor per
// timestep. Rows past a sequence's length hold zeros with an all-zero mask.
// The *_bwd tensors hold the same data reversed per subject (padding stays in
// place), and delta_bwd comes straight from the preprocessed backward gaps,
// which are already expressed in reversed step order. reverse_map[t][s] is the
// forward-order step that backward step t of subject s was taken from; the
// mapping is self-inverse, so it also realigns backward outputs.
struct SeqBatch {
  int B = 0;
  int C = 0;  // padded step count (max sequence length)
  int d = 0;
  std::vector<int> lengths;
  std::vector<ad::Tensor> x, mask, inv_mask, delta, valid;
  std::vector<ad::Tensor> x_bwd, mask_bwd, inv_mask_bwd, delta_bwd;
  std::vector<std::vector<int>> reverse_map;
};

SeqBatch make_seq_batch(const std::vector<const prep::SeqInput*>& seqs);

// One direction's (or the merged bidirectional) results, in forward step
// order for the merged case. hidden holds the top-layer state per step.
struct RitsOut {
  std::vector<ad::Tape::Id> hidden;     // C tensors {B,width}
  std::vector<ad::Tape::Id> completed;  // C tensors {B,d}
  std::vector<ad::Tape::Id> estimates;  // C tensors {B,d}
  ad::Tape::Id imp_loss = -1;           // scalar, >= 0
};

// gamma = exp(-relu(delta W + b)), elementwise in (0, 1].
ad::Tape::Id decay_factor(ad::Tape& tape, ad::Tape::Id delta, ad::Tape::Id W,
                          ad::Tape::Id b);

struct LstmState {
  ad::Tape::Id h = -1;
  ad::Tape::Id c = -1;
};

LstmState lstm_step(ad::Tape& tape, ad::Tape::Id x, LstmState state,
                    ad::Tape::Id W_ih, ad::Tape::Id W_hh, ad::Tape::Id b);

// Single-direction pass: per step, decay the first-layer hidden state by the
// gap-driven factor, regress an estimate from it, splice estimates into the
// unobserved slots, score the estimate against observed entries, then feed
// [completed, mask] through the LSTM stack. `backward` selects the reversed
// tensors of the batch.
RitsOut rits_pass(ad::Tape& tape, const std::vector<ad::Tape::Id>& params,
                  const SeqBatch& batch, const RitsParamRefs& refs, bool backward);

// Runs both directions, realigns the backward outputs to forward step order,
// and averages completed features and hidden states. The returned loss is the
// mean of the two directions' estimate losses plus a consistency penalty: the
// mean squared difference between the two directions' estimates over all
// in-sequence entries.
RitsOut birits_impute(ad::Tape& tape, const std::vector<ad::Tape::Id>& params,
                      const SeqBatch& batch, const RitsParamRefs& fwd,
                      const RitsParamRefs& bwd);

}  // namespace adrisk::imputer
