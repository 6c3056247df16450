#include "adrisk/synth.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "adrisk/errors.hpp"
#include "adrisk/rng.hpp"

namespace adrisk::cohort {

namespace {

constexpr double kIcvMean = 1.5e6;
constexpr double kIcvStd = 1.5e5;

// group-independent vitals after education and MMSE: sbp, dbp, hr, bmi
constexpr std::array<double, 4> kVitalMean{125.0, 75.0, 70.0, 26.0};
constexpr std::array<double, 4> kVitalStd{15.0, 10.0, 10.0, 4.0};
constexpr std::array<double, 10> kFlagPrevalence{0.3, 0.25, 0.2, 0.15, 0.4,
                                                 0.1, 0.35, 0.2, 0.15, 0.25};

void check_rate(double r, const char* what) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw ConfigError(std::string(what) + " must lie in [0,1), got " + std::to_string(r));
  }
}

void check_stats(const GroupStats& g, const char* which) {
  for (double s : g.composite_std) {
    if (!(s > 0.0)) throw ConfigError(std::string(which) + ": composite STDs must be positive");
  }
  if (!(g.age_std > 0.0 && g.education_std > 0.0 && g.mmse_std > 0.0)) {
    throw ConfigError(std::string(which) + ": feature STDs must be positive");
  }
  if (!(g.male_fraction >= 0.0 && g.male_fraction <= 1.0)) {
    throw ConfigError(std::string(which) + ": male fraction must lie in [0,1]");
  }
}

// converter latent composite value at a given month; the step drop switches
// on one visit before conversion but never at baseline, so baseline means
// stay calibrated
double pmci_latent(const SynthConfig& cfg, int dom, double base, int month, int prog_month) {
  double v = base + cfg.decline_slope[dom] * (month / static_cast<double>(kVisitInterval));
  if (month >= prog_month - kVisitInterval && month >= kVisitInterval) {
    v += cfg.preprogression_drop[dom];
  }
  return v;
}

std::vector<double> draw_matrix(std::uint64_t seed, const char* stream, int rows, int cols,
                                double lo, double hi) {
  auto eng = rng::make_engine(seed, stream);
  std::vector<double> m(static_cast<std::size_t>(rows) * cols);
  for (double& v : m) v = rng::uniform(eng, lo, hi);
  return m;
}

int draw_progression_month(const SynthConfig& cfg, rng::Engine& eng) {
  double total = 0.0;
  for (double w : cfg.progression_weights) total += w;
  double u = rng::uniform01(eng) * total;
  for (int i = 0; i < 10; ++i) {
    u -= cfg.progression_weights[i];
    if (u < 0.0) return (i + 1) * kVisitInterval;
  }
  return 10 * kVisitInterval;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_subjects < 0) throw ConfigError("n_subjects must be non-negative");
  if (!(pmci_fraction >= 0.0 && pmci_fraction <= 1.0)) {
    throw ConfigError("pmci_fraction must lie in [0,1]");
  }
  check_stats(pmci, "pmci stats");
  check_stats(smci, "smci stats");
  if (!(composite_noise_std >= 0.0)) throw ConfigError("composite_noise_std must be >= 0");
  check_rate(imaging_missing_rate, "imaging_missing_rate");
  check_rate(cognition_missing_rate, "cognition_missing_rate");
  check_rate(composite_missing_rate, "composite_missing_rate");
  check_rate(diagnosis_missing_rate, "diagnosis_missing_rate");
  double total = 0.0;
  for (double w : progression_weights) {
    if (w < 0.0) throw ConfigError("progression weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("progression weights must not all be zero");
}

Cohort generate_synthetic_cohort(const SynthConfig& cfg) {
  cfg.validate();

  // fixed population structure shared by all subjects
  const std::vector<double> roi_base =
      draw_matrix(cfg.seed, "roi-base", kImagingDim, 1, 2000.0, 15000.0);
  const std::vector<double> img_load =
      draw_matrix(cfg.seed, "imaging-loadings", kImagingDim, kCompositeCount, -1.0, 1.0);
  const std::vector<double> cog_load =
      draw_matrix(cfg.seed, "cognition-loadings", kCognitionDim, kCompositeCount, -1.0, 1.0);
  const std::vector<double> cog_offset =
      draw_matrix(cfg.seed, "cognition-offsets", kCognitionDim, 1, 10.0, 30.0);

  const int n_pmci =
      static_cast<int>(std::lround(cfg.n_subjects * cfg.pmci_fraction));

  Cohort out;
  out.subjects.reserve(cfg.n_subjects);
  for (int i = 0; i < cfg.n_subjects; ++i) {
    const bool progressor = i < n_pmci;
    const GroupStats& gs = progressor ? cfg.pmci : cfg.smci;
    auto eng = rng::make_engine(cfg.seed, "subject", static_cast<std::uint64_t>(i));

    Subject s;
    char buf[16];
    std::snprintf(buf, sizeof buf, "synth-%05d", i);
    s.id = buf;
    s.group = progressor ? Group::Pmci : Group::Smci;

    const double age = rng::gaussian(eng, gs.age_mean, gs.age_std);
    const bool male = rng::bernoulli(eng, gs.male_fraction);
    s.clinical.reserve(kClinicalDim);
    s.clinical.push_back(age);
    s.clinical.push_back(male ? 1.0 : 0.0);
    s.clinical.push_back(rng::gaussian(eng, gs.education_mean, gs.education_std));
    s.clinical.push_back(rng::gaussian(eng, gs.mmse_mean, gs.mmse_std));
    for (int j = 0; j < 4; ++j) {
      s.clinical.push_back(rng::gaussian(eng, kVitalMean[j], kVitalStd[j]));
    }
    for (int j = 0; j < 10; ++j) {
      s.clinical.push_back(rng::bernoulli(eng, kFlagPrevalence[j]) ? 1.0 : 0.0);
    }
    s.icv = std::max(1e6, rng::gaussian(eng, kIcvMean, kIcvStd));

    const int prog_month = progressor ? draw_progression_month(cfg, eng) : -1;
    const int last_month = progressor ? prog_month : kFollowupMonths;

    std::array<double, kCompositeCount> base{};
    for (int d = 0; d < kCompositeCount; ++d) {
      base[d] = rng::gaussian(eng, gs.composite_mean[d], gs.composite_std[d]);
    }

    for (int month = 0; month <= last_month; month += kVisitInterval) {
      Visit v = Visit::empty(month);
      const bool baseline = month == 0;
      const bool conversion = progressor && month == prog_month;
      v.diagnosis = conversion ? Diagnosis::AD : Diagnosis::MCI;

      std::array<double, kCompositeCount> latent{};
      for (int d = 0; d < kCompositeCount; ++d) {
        latent[d] = progressor ? pmci_latent(cfg, d, base[d], month, prog_month) : base[d];
        v.composites[d] = latent[d] + rng::gaussian(eng, 0.0, cfg.composite_noise_std);
        v.composite_mask[d] = true;
      }
      for (int j = 0; j < kCognitionDim; ++j) {
        double load = 0.0;
        for (int d = 0; d < kCompositeCount; ++d) {
          load += cog_load[static_cast<std::size_t>(j) * kCompositeCount + d] * latent[d];
        }
        v.cognition[j] = cog_offset[j] + load + rng::gaussian(eng, 0.0, 0.5);
        v.cognition_mask[j] = true;
      }
      const double head_scale = s.icv / kIcvMean;
      for (int j = 0; j < kImagingDim; ++j) {
        double load = 0.0;
        for (int d = 0; d < kCompositeCount; ++d) {
          load += img_load[static_cast<std::size_t>(j) * kCompositeCount + d] * latent[d];
        }
        v.imaging[j] = head_scale * roi_base[j] * (1.0 + 0.03 * load) *
                       (1.0 + rng::gaussian(eng, 0.0, 0.02));
        v.imaging_mask[j] = true;
      }

      // whole-block dropout per visit; the baseline visit stays complete and
      // the conversion diagnosis is always recorded
      if (!baseline) {
        if (rng::bernoulli(eng, cfg.imaging_missing_rate)) {
          v.imaging_mask.assign(kImagingDim, false);
        }
        if (rng::bernoulli(eng, cfg.cognition_missing_rate)) {
          v.cognition_mask.assign(kCognitionDim, false);
        }
        for (int d = 0; d < kCompositeCount; ++d) {
          if (rng::bernoulli(eng, cfg.composite_missing_rate)) v.composite_mask[d] = false;
        }
        if (!conversion && rng::bernoulli(eng, cfg.diagnosis_missing_rate)) {
          v.diagnosis = Diagnosis::Missing;
        }
      }
      s.visits.push_back(std::move(v));
    }
    out.subjects.push_back(std::move(s));
  }
  return out;
}

}  // namespace adrisk::cohort
