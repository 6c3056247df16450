#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "adrisk/adam.hpp"
#include "adrisk/errors.hpp"
#include "adrisk/imputer.hpp"
#include "adrisk/params.hpp"
#include "adrisk/preprocess.hpp"
#include "adrisk/rng.hpp"
#include "adrisk/tape.hpp"

using namespace adrisk;
using imputer::RitsParamRefs;
using imputer::RitsSpec;
using imputer::SeqBatch;

namespace {

template <typename E, typename F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return "";
}

// Assembles a stream the same way the preprocessing stage does: values zeroed
// where unobserved, forward gaps from the observation recurrence, backward
// gaps from the reversed masks over reconstructed reversed months.
prep::SeqInput make_seq(const std::vector<std::vector<double>>& x,
                        const std::vector<std::vector<bool>>& m,
                        const std::vector<int>& months) {
  const int T = static_cast<int>(x.size());
  const int d = static_cast<int>(x[0].size());
  prep::SeqInput s;
  s.T = T;
  s.d = d;
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < d; ++j) {
      s.x.push_back(m[t][j] ? x[t][j] : 0.0);
      s.mask.push_back(m[t][j] ? 1.0 : 0.0);
    }
  }
  for (const auto& row : prep::compute_time_gaps(m, months)) {
    s.delta_fwd.insert(s.delta_fwd.end(), row.begin(), row.end());
  }
  std::vector<std::vector<bool>> rm(m.rbegin(), m.rend());
  std::vector<int> rmonths(T, 0);
  for (int k = 1; k < T; ++k) {
    rmonths[k] = rmonths[k - 1] + (months[T - k] - months[T - 1 - k]);
  }
  for (const auto& row : prep::compute_time_gaps(rm, rmonths)) {
    s.delta_bwd.insert(s.delta_bwd.end(), row.begin(), row.end());
  }
  return s;
}

prep::SeqInput random_seq(rng::Engine& eng, int T, int d) {
  std::vector<std::vector<double>> x(T, std::vector<double>(d));
  std::vector<std::vector<bool>> m(T, std::vector<bool>(d));
  std::vector<int> months(T);
  int month = 0;
  for (int t = 0; t < T; ++t) {
    months[t] = month;
    month += 6 * (1 + static_cast<int>(rng::below(eng, 3)));
    for (int j = 0; j < d; ++j) {
      x[t][j] = rng::uniform01(eng);
      m[t][j] = rng::bernoulli(eng, 0.5);
    }
  }
  return make_seq(x, m, months);
}

void zero_params(ad::ParamStore& store) {
  for (ad::Tensor& t : store.values) {
    for (double& v : t.data) v = 0.0;
  }
}

double eval_imp_loss(const ad::ParamStore& store, const SeqBatch& batch,
                     const RitsParamRefs& fwd, const RitsParamRefs& bwd) {
  ad::Tape tape;
  const auto ids = ad::attach_params(tape, store);
  const auto out = imputer::birits_impute(tape, ids, batch, fwd, bwd);
  return tape.value(out.imp_loss).scalar_value();
}

}  // namespace

TEST_CASE("decay factor follows exp(-relu(affine)) with range (0,1]") {
  ad::Tape tape;
  // zero weights, zero gap -> exactly one
  const auto d0 = tape.constant(ad::Tensor::zeros(2, 3));
  const auto W0 = tape.constant(ad::Tensor::zeros(3, 4));
  const auto b0 = tape.constant(ad::Tensor::zeros(1, 4));
  const auto g0 = imputer::decay_factor(tape, d0, W0, b0);
  for (double v : tape.value(g0).data) CHECK(v == 1.0);

  // positive weight, zero bias: strictly decreasing in the gap
  const auto W = tape.constant(ad::Tensor::scalar(0.5));
  const auto b = tape.constant(ad::Tensor::scalar(0.0));
  double prev = 2.0;
  for (double gap : {0.0, 1.0, 3.0, 9.0}) {
    const auto g = imputer::decay_factor(
        tape, tape.constant(ad::Tensor::scalar(gap)), W, b);
    const double v = tape.value(g).scalar_value();
    CHECK(v == doctest::Approx(std::exp(-0.5 * gap)).epsilon(1e-12));
    CHECK(v < prev);
    prev = v;
  }

  // random instances: range plus per-element hidden shrinkage
  auto eng = rng::make_engine(11, "decay-range");
  for (int it = 0; it < 50; ++it) {
    ad::Tape t2;
    ad::Tensor delta = ad::Tensor::zeros(2, 3);
    for (double& v : delta.data) v = 6.0 * rng::below(eng, 5);
    ad::Tensor Wr = ad::Tensor::zeros(3, 4);
    for (double& v : Wr.data) v = rng::uniform(eng, -1.0, 1.0);
    ad::Tensor br = ad::Tensor::zeros(1, 4);
    for (double& v : br.data) v = rng::uniform(eng, -1.0, 1.0);
    ad::Tensor h = ad::Tensor::zeros(2, 4);
    for (double& v : h.data) v = rng::uniform(eng, -3.0, 3.0);

    const auto g = imputer::decay_factor(t2, t2.constant(delta),
                                         t2.constant(Wr), t2.constant(br));
    const auto hd = t2.mul(t2.constant(h), g);
    double norm_before = 0.0, norm_after = 0.0;
    for (std::size_t i = 0; i < h.data.size(); ++i) {
      const double gv = t2.value(g).data[i];
      CHECK(gv > 0.0);
      CHECK(gv <= 1.0);
      CHECK(std::abs(t2.value(hd).data[i]) <= std::abs(h.data[i]));
      norm_before += h.data[i] * h.data[i];
      norm_after += t2.value(hd).data[i] * t2.value(hd).data[i];
    }
    CHECK(norm_after <= norm_before);
  }
}

TEST_CASE("lstm step hand arithmetic, determinism, and shape errors") {
  auto build = [](ad::Tape& tape, const ad::Tensor& xv, const ad::Tensor& hv,
                  const ad::Tensor& cv) {
    const int H = cv.cols();
    const int in_dim = xv.cols();
    imputer::LstmState st{tape.constant(hv), tape.constant(cv)};
    return imputer::lstm_step(tape, tape.constant(xv), st,
                              tape.constant(ad::Tensor::zeros(in_dim, 4 * H)),
                              tape.constant(ad::Tensor::zeros(H, 4 * H)),
                              tape.constant(ad::Tensor::zeros(1, 4 * H)));
  };

  ad::Tape tape;
  auto eng = rng::make_engine(3, "lstm-zero");
  ad::Tensor x = ad::Tensor::zeros(2, 3);
  for (double& v : x.data) v = rng::uniform(eng, -1.0, 1.0);

  // all-zero weights with zero cell state: gates 0.5, candidate 0
  auto st = build(tape, x, ad::Tensor::zeros(2, 4), ad::Tensor::zeros(2, 4));
  for (double v : tape.value(st.h).data) CHECK(v == 0.0);
  for (double v : tape.value(st.c).data) CHECK(v == 0.0);

  // nonzero cell state: c' = 0.5*c, h' = 0.5*tanh(0.5*c)
  ad::Tensor c = ad::Tensor::zeros(2, 4);
  for (double& v : c.data) v = rng::uniform(eng, -2.0, 2.0);
  auto st2 = build(tape, x, ad::Tensor::zeros(2, 4), c);
  for (std::size_t i = 0; i < c.data.size(); ++i) {
    CHECK(tape.value(st2.c).data[i] == doctest::Approx(0.5 * c.data[i]).epsilon(1e-12));
    CHECK(tape.value(st2.h).data[i] ==
          doctest::Approx(0.5 * std::tanh(0.5 * c.data[i])).epsilon(1e-12));
  }

  // determinism: identical rebuild gives identical values
  ad::Tape t2;
  auto st3 = build(t2, x, ad::Tensor::zeros(2, 4), c);
  CHECK(t2.value(st3.h).data == tape.value(st2.h).data);
  CHECK(t2.value(st3.c).data == tape.value(st2.c).data);

  // mismatched gate matrix is a dimension error
  CHECK_THROWS_AS(([&] {
                    ad::Tape t3;
                    imputer::LstmState s0{t3.constant(ad::Tensor::zeros(2, 4)),
                                          t3.constant(ad::Tensor::zeros(2, 4))};
                    imputer::lstm_step(t3, t3.constant(x), s0,
                                       t3.constant(ad::Tensor::zeros(5, 16)),
                                       t3.constant(ad::Tensor::zeros(4, 16)),
                                       t3.constant(ad::Tensor::zeros(1, 16)));
                  }()),
                  DimensionError);
}

TEST_CASE("stack shape contract: top hidden is one width-sized row per step") {
  auto eng = rng::make_engine(7, "shape");
  ad::ParamStore store;
  const RitsSpec spec{5, 128, 3};
  const auto fwd = imputer::register_rits_params(store, "s.fwd", spec, eng);

  std::vector<prep::SeqInput> seqs;
  for (int i = 0; i < 2; ++i) seqs.push_back(random_seq(eng, 4, 5));
  const SeqBatch batch = imputer::make_seq_batch({&seqs[0], &seqs[1]});

  ad::Tape tape;
  const auto ids = ad::attach_params(tape, store);
  const auto out = imputer::rits_pass(tape, ids, batch, fwd, false);
  REQUIRE(out.hidden.size() == 4);
  REQUIRE(out.completed.size() == 4);
  REQUIRE(out.estimates.size() == 4);
  for (int t = 0; t < 4; ++t) {
    CHECK(tape.value(out.hidden[t]).rows() == 2);
    CHECK(tape.value(out.hidden[t]).cols() == 128);
    CHECK(tape.value(out.completed[t]).cols() == 5);
    CHECK(tape.value(out.estimates[t]).cols() == 5);
  }
  CHECK(tape.value(out.imp_loss).scalar_value() >= 0.0);
}

TEST_CASE("batch assembly: padding, reversal, and gap alignment") {
  const auto s0 = make_seq({{10.0}, {20.0}}, {{true}, {true}}, {0, 6});
  const auto s1 = make_seq({{7.0}}, {{true}}, {0});
  const SeqBatch b = imputer::make_seq_batch({&s0, &s1});

  REQUIRE(b.B == 2);
  REQUIRE(b.C == 2);
  REQUIRE(b.d == 1);
  CHECK(b.lengths == std::vector<int>{2, 1});

  CHECK(b.x[0].at(0, 0) == 10.0);
  CHECK(b.x[0].at(1, 0) == 7.0);
  CHECK(b.x[1].at(0, 0) == 20.0);
  CHECK(b.x[1].at(1, 0) == 0.0);  // padding
  CHECK(b.mask[1].at(1, 0) == 0.0);
  CHECK(b.inv_mask[1].at(1, 0) == 0.0);  // padded rows stay fully inert
  CHECK(b.valid[0].at(1, 0) == 1.0);
  CHECK(b.valid[1].at(1, 0) == 0.0);

  CHECK(b.x_bwd[0].at(0, 0) == 20.0);
  CHECK(b.x_bwd[0].at(1, 0) == 7.0);
  CHECK(b.x_bwd[1].at(0, 0) == 10.0);
  CHECK(b.x_bwd[1].at(1, 0) == 0.0);
  CHECK(b.reverse_map[0] == std::vector<int>{1, 0});
  CHECK(b.reverse_map[1] == std::vector<int>{0, 1});

  CHECK(b.delta[0].at(0, 0) == 0.0);
  CHECK(b.delta[1].at(0, 0) == 6.0);
  CHECK(b.delta_bwd[0].at(0, 0) == 0.0);
  CHECK(b.delta_bwd[1].at(0, 0) == 6.0);

  CHECK_THROWS_AS(imputer::make_seq_batch({}), UsageError);
  const auto wide = make_seq({{1.0, 2.0}}, {{true, true}}, {0});
  CHECK(thrown_message<DimensionError>(
            [&] { imputer::make_seq_batch({&s0, &wide}); })
            .find("feature width") != std::string::npos);
  prep::SeqInput broken = s0;
  broken.mask.pop_back();
  CHECK_THROWS_AS(imputer::make_seq_batch({&broken}), DimensionError);
}

TEST_CASE("single step with zero weights regresses the bias") {
  auto eng = rng::make_engine(5, "bias-step");
  ad::ParamStore store;
  const RitsSpec spec{2, 3, 2};
  const auto fwd = imputer::register_rits_params(store, "z.fwd", spec, eng);
  zero_params(store);
  store.values[fwd.hist_b].data = {0.7, 0.7};

  const auto seq = make_seq({{0.25, 0.0}}, {{true, false}}, {0});
  const SeqBatch batch = imputer::make_seq_batch({&seq});

  ad::Tape tape;
  const auto ids = ad::attach_params(tape, store);
  const auto out = imputer::rits_pass(tape, ids, batch, fwd, false);
  CHECK(tape.value(out.estimates[0]).at(0, 0) == 0.7);
  CHECK(tape.value(out.estimates[0]).at(0, 1) == 0.7);
  CHECK(tape.value(out.completed[0]).at(0, 0) == 0.25);  // observed passthrough
  CHECK(tape.value(out.completed[0]).at(0, 1) == 0.7);   // bias fills the gap
  CHECK(tape.value(out.imp_loss).scalar_value() ==
        doctest::Approx((0.25 - 0.7) * (0.25 - 0.7)).epsilon(1e-12));
}

TEST_CASE("all-missing stream scores zero imputation loss") {
  auto eng = rng::make_engine(6, "all-missing");
  ad::ParamStore store;
  const RitsSpec spec{2, 4, 2};
  const auto fwd = imputer::register_rits_params(store, "am.fwd", spec, eng);
  const auto bwd = imputer::register_rits_params(store, "am.bwd", spec, eng);

  const auto seq = make_seq({{0.4, 0.6}, {0.1, 0.9}, {0.5, 0.2}},
                            {{false, false}, {false, false}, {false, false}},
                            {0, 6, 12});
  const SeqBatch batch = imputer::make_seq_batch({&seq});

  ad::Tape tape;
  const auto ids = ad::attach_params(tape, store);
  const auto f = imputer::rits_pass(tape, ids, batch, fwd, false);
  CHECK(tape.value(f.imp_loss).scalar_value() == 0.0);
  for (int t = 0; t < 3; ++t) {
    CHECK(tape.value(f.completed[t]).data == tape.value(f.estimates[t]).data);
  }

  // bidirectional loss reduces to the consistency term alone
  const auto out = imputer::birits_impute(tape, ids, batch, fwd, bwd);
  CHECK(tape.value(out.imp_loss).scalar_value() >= 0.0);
}

TEST_CASE("observed entries pass through bit-exactly in both directions") {
  auto eng = rng::make_engine(9, "passthrough");
  std::vector<ad::ParamStore> stores(4);
  std::vector<RitsParamRefs> fwd, bwd;
  for (int d = 1; d <= 4; ++d) {
    const RitsSpec spec{d, 6, 2};
    fwd.push_back(imputer::register_rits_params(stores[d - 1], "p.fwd", spec, eng));
    bwd.push_back(imputer::register_rits_params(stores[d - 1], "p.bwd", spec, eng));
  }

  int observed_checked = 0;
  for (int it = 0; it < 1000; ++it) {
    const int T = 1 + static_cast<int>(rng::below(eng, 6));
    const int d = 1 + static_cast<int>(rng::below(eng, 4));
    const auto seq = random_seq(eng, T, d);
    const SeqBatch batch = imputer::make_seq_batch({&seq});

    ad::Tape tape;
    const auto ids = ad::attach_params(tape, stores[d - 1]);
    const auto out = imputer::birits_impute(tape, ids, batch, fwd[d - 1], bwd[d - 1]);
    const double loss = tape.value(out.imp_loss).scalar_value();
    CHECK(loss >= 0.0);
    CHECK(std::isfinite(loss));
    for (int t = 0; t < T; ++t) {
      for (int j = 0; j < d; ++j) {
        if (seq.mask[static_cast<std::size_t>(t) * d + j] == 1.0) {
          // operator== on the doubles: the completion must not perturb
          // observed values at all
          CHECK(tape.value(out.completed[t]).at(0, j) ==
                seq.x[static_cast<std::size_t>(t) * d + j]);
          ++observed_checked;
        }
      }
    }
  }
  CHECK(observed_checked > 3000);
}

TEST_CASE("symmetric zero-weight instance has zero consistency penalty") {
  auto eng = rng::make_engine(12, "symmetry");
  ad::ParamStore store;
  const RitsSpec spec{1, 3, 2};
  const auto fwd = imputer::register_rits_params(store, "sym.fwd", spec, eng);
  const auto bwd = imputer::register_rits_params(store, "sym.bwd", spec, eng);
  zero_params(store);
  store.values[fwd.hist_b].data = {0.3};
  store.values[bwd.hist_b].data = {0.3};

  // palindromic values on an even grid; the middle visit is unobserved
  const auto seq = make_seq({{0.8}, {0.0}, {0.8}}, {{true}, {false}, {true}},
                            {0, 6, 12});
  const SeqBatch batch = imputer::make_seq_batch({&seq});

  ad::Tape tape;
  const auto ids = ad::attach_params(tape, store);
  const auto f = imputer::rits_pass(tape, ids, batch, fwd, false);
  const auto out = imputer::birits_impute(tape, ids, batch, fwd, bwd);

  // both directions regress the shared bias everywhere, so the merged loss
  // is exactly the one-direction loss: consistency contributes nothing
  CHECK(tape.value(out.imp_loss).scalar_value() ==
        tape.value(f.imp_loss).scalar_value());
  CHECK(tape.value(out.estimates[1]).at(0, 0) == 0.3);
  CHECK(tape.value(out.completed[0]).at(0, 0) == 0.8);
  CHECK(tape.value(out.completed[1]).at(0, 0) == 0.3);
  CHECK(tape.value(out.completed[2]).at(0, 0) == 0.8);
}

namespace {

// Plain-double transcription of the one-layer, width-one recurrence, used as
// an oracle for the tape-built graph.
struct ScalarRits {
  double Wgh, bgh, Wx, bx;
  double Wih[2][4], Whh[4], b[4];
};

ScalarRits load_scalar(const ad::ParamStore& st, const RitsParamRefs& r) {
  ScalarRits p{};
  p.Wgh = st.values[r.gamma_h_W].data[0];
  p.bgh = st.values[r.gamma_h_b].data[0];
  p.Wx = st.values[r.hist_W].data[0];
  p.bx = st.values[r.hist_b].data[0];
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 4; ++k) p.Wih[i][k] = st.values[r.layers[0].W_ih].data[i * 4 + k];
  for (int k = 0; k < 4; ++k) p.Whh[k] = st.values[r.layers[0].W_hh].data[k];
  for (int k = 0; k < 4; ++k) p.b[k] = st.values[r.layers[0].b].data[k];
  return p;
}

struct ScalarOut {
  std::vector<double> est, comp, hid;
  double loss = 0.0;
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

ScalarOut scalar_rits(const ScalarRits& p, const std::vector<double>& x,
                      const std::vector<double>& m, const std::vector<double>& delta) {
  ScalarOut o;
  double h = 0.0, c = 0.0, sq = 0.0;
  int observed = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double gamma = std::exp(-std::max(0.0, p.Wgh * delta[t] + p.bgh));
    h *= gamma;
    const double est = p.Wx * h + p.bx;
    const double comp = m[t] * x[t] + (1.0 - m[t]) * est;
    double z[4];
    for (int k = 0; k < 4; ++k) {
      z[k] = comp * p.Wih[0][k] + m[t] * p.Wih[1][k] + h * p.Whh[k] + p.b[k];
    }
    const double gi = sigmoid(z[0]), gf = sigmoid(z[1]);
    const double gc = std::tanh(z[2]), go = sigmoid(z[3]);
    c = gf * c + gi * gc;
    h = go * std::tanh(c);
    o.est.push_back(est);
    o.comp.push_back(comp);
    o.hid.push_back(h);
    if (m[t] == 1.0) {
      sq += (x[t] - est) * (x[t] - est);
      ++observed;
    }
  }
  o.loss = observed > 0 ? sq / observed : 0.0;
  return o;
}

}  // namespace

TEST_CASE("tiny bidirectional instance matches a scalar hand unroll") {
  for (int trial = 0; trial < 20; ++trial) {
    auto eng = rng::make_engine(100 + trial, "hand-unroll");
    ad::ParamStore store;
    const RitsSpec spec{1, 1, 1};
    const auto fwd = imputer::register_rits_params(store, "h.fwd", spec, eng);
    const auto bwd = imputer::register_rits_params(store, "h.bwd", spec, eng);
    // widen past the conservative fan-in band so the recurrence is exercised
    // away from near-linearity
    for (ad::Tensor& t : store.values) {
      for (double& v : t.data) v *= 3.0;
    }

    const int T = 2 + static_cast<int>(rng::below(eng, 2));  // T in {2,3}
    std::vector<std::vector<double>> xv;
    std::vector<std::vector<bool>> mv;
    std::vector<int> months;
    int month = 0;
    for (int t = 0; t < T; ++t) {
      xv.push_back({rng::uniform01(eng)});
      mv.push_back({t == 0 || rng::bernoulli(eng, 0.6)});
      months.push_back(month);
      month += 6 * (1 + static_cast<int>(rng::below(eng, 2)));
    }
    const auto seq = make_seq(xv, mv, months);
    const SeqBatch batch = imputer::make_seq_batch({&seq});

    ad::Tape tape;
    const auto ids = ad::attach_params(tape, store);
    const auto out = imputer::birits_impute(tape, ids, batch, fwd, bwd);

    // independent scalar recurrences, then the same merge arithmetic
    std::vector<double> x(seq.x), m(seq.mask), df(seq.delta_fwd), db(seq.delta_bwd);
    std::vector<double> xr(x.rbegin(), x.rend()), mr(m.rbegin(), m.rend());
    const ScalarOut F = scalar_rits(load_scalar(store, fwd), x, m, df);
    const ScalarOut R = scalar_rits(load_scalar(store, bwd), xr, mr, db);

    double cons = 0.0;
    for (int t = 0; t < T; ++t) {
      const int rt = T - 1 - t;
      CHECK(tape.value(out.completed[t]).at(0, 0) ==
            doctest::Approx(0.5 * (F.comp[t] + R.comp[rt])).epsilon(1e-12));
      CHECK(tape.value(out.hidden[t]).at(0, 0) ==
            doctest::Approx(0.5 * (F.hid[t] + R.hid[rt])).epsilon(1e-12));
      CHECK(tape.value(out.estimates[t]).at(0, 0) ==
            doctest::Approx(0.5 * (F.est[t] + R.est[rt])).epsilon(1e-12));
      cons += (F.est[t] - R.est[rt]) * (F.est[t] - R.est[rt]);
    }
    cons /= T;
    CHECK(tape.value(out.imp_loss).scalar_value() ==
          doctest::Approx(0.5 * (F.loss + R.loss) + cons).epsilon(1e-12));
  }
}

TEST_CASE("padded batches reproduce the solo-sequence results") {
  auto eng = rng::make_engine(21, "padding");
  ad::ParamStore store;
  const RitsSpec spec{2, 5, 2};
  const auto fwd = imputer::register_rits_params(store, "pad.fwd", spec, eng);
  const auto bwd = imputer::register_rits_params(store, "pad.bwd", spec, eng);

  std::vector<prep::SeqInput> seqs;
  for (int T : {4, 2, 3}) seqs.push_back(random_seq(eng, T, 2));
  const SeqBatch joint =
      imputer::make_seq_batch({&seqs[0], &seqs[1], &seqs[2]});

  ad::Tape tape;
  const auto ids = ad::attach_params(tape, store);
  const auto out = imputer::birits_impute(tape, ids, joint, fwd, bwd);

  for (int s = 0; s < 3; ++s) {
    const SeqBatch solo = imputer::make_seq_batch({&seqs[s]});
    ad::Tape ts;
    const auto sid = ad::attach_params(ts, store);
    const auto sout = imputer::birits_impute(ts, sid, solo, fwd, bwd);
    for (int t = 0; t < seqs[s].T; ++t) {
      for (int j = 0; j < 2; ++j) {
        CHECK(tape.value(out.completed[t]).at(s, j) ==
              doctest::Approx(ts.value(sout.completed[t]).at(0, j)).epsilon(1e-12));
        CHECK(tape.value(out.estimates[t]).at(s, j) ==
              doctest::Approx(ts.value(sout.estimates[t]).at(0, j)).epsilon(1e-12));
      }
      for (int j = 0; j < 5; ++j) {
        CHECK(tape.value(out.hidden[t]).at(s, j) ==
              doctest::Approx(ts.value(sout.hidden[t]).at(0, j)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("imputation loss gradients match finite differences") {
  auto eng = rng::make_engine(31, "imputer-fd");
  ad::ParamStore store;
  const RitsSpec spec{2, 4, 3};
  const auto fwd = imputer::register_rits_params(store, "fd.fwd", spec, eng);
  const auto bwd = imputer::register_rits_params(store, "fd.bwd", spec, eng);

  std::vector<prep::SeqInput> seqs{random_seq(eng, 3, 2), random_seq(eng, 2, 2)};
  const SeqBatch batch = imputer::make_seq_batch({&seqs[0], &seqs[1]});

  ad::Tape tape;
  const auto ids = ad::attach_params(tape, store);
  const auto out = imputer::birits_impute(tape, ids, batch, fwd, bwd);
  tape.backward(out.imp_loss);
  std::vector<ad::Tensor> analytic;
  for (auto id : ids) analytic.push_back(tape.grad(id));

  const double h = 1e-5;
  int checked = 0;
  for (std::size_t p = 0; p < store.count(); ++p) {
    for (std::size_t i = 0; i < store.values[p].data.size(); ++i) {
      double& theta = store.values[p].data[i];
      const double saved = theta;
      theta = saved + h;
      const double up = eval_imp_loss(store, batch, fwd, bwd);
      theta = saved - h;
      const double dn = eval_imp_loss(store, batch, fwd, bwd);
      theta = saved;
      const double fd = (up - dn) / (2.0 * h);
      const double an = analytic[p].data[i];
      const double rel =
          std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)});
      CHECK(rel < 1e-4);
      ++checked;
    }
  }
  CHECK(checked == store.scalar_count());

  // the registered-but-unused input-decay pair must stay gradient-free
  for (const auto& refs : {fwd, bwd}) {
    for (double g : analytic[refs.gamma_x_W].data) CHECK(g == 0.0);
    for (double g : analytic[refs.gamma_x_b].data) CHECK(g == 0.0);
  }
}

TEST_CASE("two hundred optimization steps halve held-out sinusoid error") {
  const int B = 8, T = 48;
  auto eng = rng::make_engine(77, "sinusoid");

  std::vector<prep::SeqInput> seqs;
  std::vector<std::vector<double>> truth(B);  // noisy series, 30% hidden
  std::vector<std::vector<bool>> observed(B);
  for (int s = 0; s < B; ++s) {
    const double phase = rng::uniform(eng, 0.0, 12.0);
    std::vector<std::vector<double>> x;
    std::vector<std::vector<bool>> m;
    std::vector<int> months;
    for (int t = 0; t < T; ++t) {
      const double v = 0.5 + 0.35 * std::sin(2.0 * M_PI * (t + phase) / 12.0) +
                       rng::gaussian(eng, 0.0, 0.02);
      const bool obs = rng::bernoulli(eng, 0.7);
      truth[s].push_back(v);
      observed[s].push_back(obs);
      x.push_back({v});
      m.push_back({obs});
      months.push_back(6 * t);
    }
    seqs.push_back(make_seq(x, m, months));
  }
  std::vector<const prep::SeqInput*> ptrs;
  for (const auto& s : seqs) ptrs.push_back(&s);
  const SeqBatch batch = imputer::make_seq_batch(ptrs);

  ad::ParamStore store;
  const RitsSpec spec{1, 16, 2};
  const auto fwd = imputer::register_rits_params(store, "sin.fwd", spec, eng);
  const auto bwd = imputer::register_rits_params(store, "sin.bwd", spec, eng);

  auto heldout_mse = [&] {
    ad::Tape tape;
    const auto ids = ad::attach_params(tape, store);
    const auto out = imputer::birits_impute(tape, ids, batch, fwd, bwd);
    double sq = 0.0;
    int n = 0;
    for (int s = 0; s < B; ++s) {
      for (int t = 0; t < T; ++t) {
        if (observed[s][t]) continue;
        const double err = tape.value(out.estimates[t]).at(s, 0) - truth[s][t];
        sq += err * err;
        ++n;
      }
    }
    REQUIRE(n > 0);
    return sq / n;
  };

  const double before = heldout_mse();

  ad::AdamConfig cfg;
  cfg.lr = 0.01;
  ad::AdamState adam = ad::AdamState::init(store, cfg);
  double first_loss = 0.0, last_loss = 0.0;
  for (int step = 0; step < 200; ++step) {
    ad::Tape tape;
    const auto ids = ad::attach_params(tape, store);
    const auto out = imputer::birits_impute(tape, ids, batch, fwd, bwd);
    last_loss = tape.value(out.imp_loss).scalar_value();
    if (step == 0) first_loss = last_loss;
    tape.backward(out.imp_loss);
    std::vector<ad::Tensor> grads;
    for (auto id : ids) grads.push_back(tape.grad(id));
    ad::adam_step(store, grads, adam);
  }

  const double after = heldout_mse();
  CHECK(last_loss < first_loss);
  CHECK(after <= 0.5 * before);
}

TEST_CASE("mismatched stream width is rejected") {
  auto eng = rng::make_engine(41, "mismatch");
  ad::ParamStore store;
  const auto fwd = imputer::register_rits_params(store, "m.fwd", RitsSpec{3, 4, 1}, eng);

  const auto seq = random_seq(eng, 2, 2);
  const SeqBatch batch = imputer::make_seq_batch({&seq});
  ad::Tape tape;
  const auto ids = ad::attach_params(tape, store);
  const std::string msg = thrown_message<DimensionError>(
      [&] { imputer::rits_pass(tape, ids, batch, fwd, false); });
  CHECK(msg.find("3") != std::string::npos);
  CHECK(msg.find("2") != std::string::npos);

  CHECK_THROWS_AS(
      imputer::register_rits_params(store, "m.bad", RitsSpec{0, 4, 1}, eng),
      ConfigError);
}
