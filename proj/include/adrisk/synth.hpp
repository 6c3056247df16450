#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "adrisk/cohort.hpp"

namespace adrisk::cohort {

// Baseline feature distributions for one outcome group.
struct GroupStats {
  std::array<double, kCompositeCount> composite_mean{};
  std::array<double, kCompositeCount> composite_std{};
  double age_mean = 0.0;
  double age_std = 0.0;
  double male_fraction = 0.0;
  double education_mean = 0.0;
  double education_std = 0.0;
  double mmse_mean = 0.0;
  double mmse_std = 0.0;
};

// Calibrated generator configuration. Defaults reproduce the published
// cohort's descriptive statistics (group sizes, age, sex balance, baseline
// composite means and spreads).
struct SynthConfig {
  int n_subjects = 634;
  double pmci_fraction = 209.0 / 634.0;
  GroupStats pmci{{-0.98, -1.1, -1.01, -0.76},
                  {0.68, 0.85, 1.1, 1.07},
                  73.7, 7.0, 115.0 / 209.0,
                  15.4, 2.27, 24.8, 2.1};
  GroupStats smci{{0.52, 0.53, 0.48, 0.07},
                  {0.81, 0.76, 0.82, 0.74},
                  72.5, 7.0, 252.0 / 425.0,
                  16.2, 2.55, 28.7, 1.7};
  // converter latent decline per visit, plus an extra step drop once the
  // subject is within one visit of conversion (what makes individual visits
  // separable, not just subjects)
  std::array<double, kCompositeCount> decline_slope{-0.05, -0.05, -0.04, -0.03};
  std::array<double, kCompositeCount> preprogression_drop{-0.9, -0.8, -0.7, -0.6};
  double composite_noise_std = 0.3;
  // relative weights over conversion months {6, 12, ..., 60}
  std::array<double, 10> progression_weights{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  // per-visit probability that a whole modality block goes unrecorded;
  // composites drop out per domain, diagnoses per visit
  double imaging_missing_rate = 0.25;
  double cognition_missing_rate = 0.20;
  double composite_missing_rate = 0.20;
  double diagnosis_missing_rate = 0.20;
  std::uint64_t seed = 0;

  void validate() const;  // ConfigError on violation
};

// Deterministic synthetic cohort. Baselines are group-conditional Gaussians;
// converter composites decline toward the conversion visit; imaging and
// cognition features load linearly on the latent composite state through
// fixed seed-derived matrices, so they carry the same signal at every visit.
Cohort generate_synthetic_cohort(const SynthConfig& cfg);

}  // namespace adrisk::cohort
