#pragma once

// Shared fixture builders for the model-level test binaries.

#include <array>
#include <string>
#include <vector>

#include "adrisk/model.hpp"
#include "adrisk/preprocess.hpp"
#include "adrisk/rng.hpp"

namespace fixtures {

using namespace adrisk;

template <typename E, typename F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return "";
}

// Stream assembly mirroring the preprocessing stage: zeros where unobserved,
// forward gaps from the observation recurrence, backward gaps over the
// reversed masks and reconstructed reversed months.
inline prep::SeqInput make_seq(const std::vector<std::vector<double>>& x,
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

inline prep::SeqInput random_stream(rng::Engine& eng, int T, int d,
                                    const std::vector<int>& months,
                                    double observe_rate = 0.7) {
  std::vector<std::vector<double>> x(T, std::vector<double>(d));
  std::vector<std::vector<bool>> m(T, std::vector<bool>(d));
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < d; ++j) {
      x[t][j] = rng::uniform01(eng);
      m[t][j] = rng::bernoulli(eng, observe_rate);
    }
  }
  return make_seq(x, m, months);
}

inline prep::ModelInput make_input(rng::Engine& eng, int T,
                                   const model::ModelConfig& cfg,
                                   const std::string& id = "s") {
  prep::ModelInput in;
  in.subject_id = id;
  in.T = T;
  for (int t = 0; t < T; ++t) in.months.push_back(6 * t);
  in.imaging = random_stream(eng, T, cfg.imaging_dim, in.months);
  in.cognition = random_stream(eng, T, cfg.cognition_dim, in.months);
  for (int j = 0; j < cfg.clinical_dim; ++j) {
    in.clinical.push_back(rng::uniform01(eng));
  }
  in.labels.subject_id = id;
  in.labels.T = T;
  for (int t = 0; t < T; ++t) {
    in.labels.y.push_back(rng::bernoulli(eng, 0.4) ? 1.0 : 0.0);
    in.labels.y_mask.push_back(true);
    std::array<double, 4> tgt{};
    std::array<bool, 4> msk{};
    for (int c = 0; c < 4; ++c) {
      tgt[c] = rng::uniform01(eng);
      msk[c] = t + 1 < T && rng::bernoulli(eng, 0.8);
    }
    in.aux_targets_unit.push_back(tgt);
    in.labels.aux_targets.push_back(tgt);
    in.labels.aux_mask.push_back(msk);
  }
  return in;
}

}  // namespace fixtures
