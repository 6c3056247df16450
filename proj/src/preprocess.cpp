#include "adrisk/preprocess.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>

#include "adrisk/errors.hpp"
#include "adrisk/log.hpp"

namespace adrisk::prep {

namespace {

using cohort::kCognitionDim;
using cohort::kCompositeCount;
using cohort::kImagingDim;

constexpr std::array<const char*, kVitalCount> kVitalNames = {
    "education", "mmse", "sbp", "dbp", "heart_rate", "bmi"};

// raw clinical layout: age, sex, then the six continuous measures, then flags
constexpr int kRawAge = 0;
constexpr int kRawSex = 1;
constexpr int kRawVitals = 2;
constexpr int kRawFlags = kRawVitals + kVitalCount;

void require_increasing(const std::vector<int>& months, const char* who) {
  for (std::size_t t = 1; t < months.size(); ++t) {
    if (months[t] <= months[t - 1]) {
      throw UsageError(std::string(who) + ": months must be strictly increasing");
    }
  }
}

}  // namespace

std::string feature_name(int feature) {
  char buf[16];
  if (feature >= kImagingOffset && feature < kCognitionOffset) {
    std::snprintf(buf, sizeof buf, "img_%02d", feature - kImagingOffset);
    return buf;
  }
  if (feature >= kCognitionOffset && feature < kAgeFeature) {
    std::snprintf(buf, sizeof buf, "cog_%02d", feature - kCognitionOffset);
    return buf;
  }
  if (feature == kAgeFeature) return "age";
  if (feature >= kVitalsOffset && feature < kContinuousFeatures) {
    return kVitalNames[feature - kVitalsOffset];
  }
  throw ConfigError("feature index out of range: " + std::to_string(feature));
}

std::string feature_fingerprint() {
  return "icvnorm-img[90]|cog[13]|age|education|mmse|sbp|dbp|heart_rate|bmi";
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw UsageError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 1) return values[0];
  const double rank = (p / 100.0) * static_cast<double>(n - 1);
  const std::size_t i0 = static_cast<std::size_t>(rank);
  if (i0 + 1 >= n) return values[n - 1];
  const double frac = rank - static_cast<double>(i0);
  return values[i0] + frac * (values[i0 + 1] - values[i0]);
}

std::vector<double> icv_normalize(const std::vector<double>& volumes, double icv) {
  if (!(icv > 0.0)) {
    throw IngestError("intracranial volume must be positive, got " + std::to_string(icv));
  }
  std::vector<double> out = volumes;
  for (double& v : out) v /= icv;
  return out;
}

ScalerParams fit_scaler(const cohort::Cohort& train) {
  std::vector<std::vector<double>> samples(kContinuousFeatures);
  for (const cohort::Subject& s : train.subjects) {
    if (s.group == cohort::Group::Excluded) continue;
    for (const cohort::Visit& v : s.visits) {
      if (v.imaging_any()) {
        const std::vector<double> norm = icv_normalize(v.imaging, s.icv);
        for (int j = 0; j < kImagingDim; ++j) {
          if (v.imaging_mask[j]) samples[kImagingOffset + j].push_back(norm[j]);
        }
      }
      for (int j = 0; j < kCognitionDim; ++j) {
        if (v.cognition_mask[j]) samples[kCognitionOffset + j].push_back(v.cognition[j]);
      }
    }
    samples[kAgeFeature].push_back(s.clinical[kRawAge]);
    for (int j = 0; j < kVitalCount; ++j) {
      samples[kVitalsOffset + j].push_back(s.clinical[kRawVitals + j]);
    }
  }

  ScalerParams out;
  out.fingerprint = feature_fingerprint();
  out.p1.resize(kContinuousFeatures);
  out.p99.resize(kContinuousFeatures);
  out.lo.resize(kContinuousFeatures);
  out.hi.resize(kContinuousFeatures);
  for (int f = 0; f < kContinuousFeatures; ++f) {
    if (samples[f].empty()) {
      throw IngestError("cannot fit scaler: feature '" + feature_name(f) +
                        "' has no observed training values");
    }
    out.p1[f] = percentile(samples[f], 1.0);
    out.p99[f] = percentile(samples[f], 99.0);
    double lo = out.p99[f], hi = out.p1[f];
    for (double v : samples[f]) {
      const double c = std::clamp(v, out.p1[f], out.p99[f]);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    out.lo[f] = lo;
    out.hi[f] = hi;
  }
  return out;
}

double apply_scaler_one(double value, int feature, const ScalerParams& params) {
  const double c = std::clamp(value, params.p1[feature], params.p99[feature]);
  const double span = params.hi[feature] - params.lo[feature];
  if (span == 0.0) return 0.0;  // constant training feature
  return (c - params.lo[feature]) / span;
}

std::vector<double> apply_scaler(const std::vector<double>& features,
                                 const std::vector<bool>& mask,
                                 const ScalerParams& params) {
  if (params.fingerprint != feature_fingerprint()) {
    throw UsageError("scaler feature ordering '" + params.fingerprint +
                     "' does not match this build's '" + feature_fingerprint() + "'");
  }
  if (features.size() != mask.size()) {
    throw DimensionError("apply_scaler: feature/mask sizes differ");
  }
  if (features.size() > static_cast<std::size_t>(kContinuousFeatures)) {
    throw DimensionError("apply_scaler: more features than the scaler was fitted for");
  }
  std::vector<double> out = features;
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (!mask[f]) continue;
    out[f] = apply_scaler_one(features[f], static_cast<int>(f), params);
  }
  return out;
}

double sex_indicator(std::string_view token) {
  if (token == "M") return 1.0;
  if (token == "F") return 0.0;
  throw IngestError("unknown sex token '" + std::string(token) + "'");
}

std::vector<double> encode_clinical(const std::vector<double>& raw,
                                    const ScalerParams& params) {
  if (static_cast<int>(raw.size()) != cohort::kClinicalDim) {
    throw DimensionError("encode_clinical: expected " +
                         std::to_string(cohort::kClinicalDim) + " values, got " +
                         std::to_string(raw.size()));
  }
  if (raw[kRawSex] != 0.0 && raw[kRawSex] != 1.0) {
    throw IngestError("sex indicator must be 0 or 1, got " + std::to_string(raw[kRawSex]));
  }
  std::vector<double> out;
  out.reserve(cohort::kClinicalDim);
  out.push_back(apply_scaler_one(raw[kRawAge], kAgeFeature, params));
  out.push_back(raw[kRawSex]);
  for (int j = 0; j < kVitalCount; ++j) {
    out.push_back(apply_scaler_one(raw[kRawVitals + j], kVitalsOffset + j, params));
  }
  for (int j = kRawFlags; j < cohort::kClinicalDim; ++j) {
    if (raw[j] != 0.0 && raw[j] != 1.0) {
      throw IngestError("comorbidity flag " + std::to_string(j - kRawFlags) +
                        " must be 0 or 1, got " + std::to_string(raw[j]));
    }
    out.push_back(raw[j]);
  }
  return out;
}

CompositeRange composite_range(int domain) {
  switch (domain) {
    case 0:
    case 1:
    case 2:
      return {-3.0, 3.0};
    case 3:
      return {-3.0, 1.0};
    default:
      throw ConfigError("unknown composite domain " + std::to_string(domain));
  }
}

double composite_unit_scale(double z, int domain) {
  const CompositeRange r = composite_range(domain);
  if (z < r.lo || z > r.hi) {
    static std::atomic<int> warned[kCompositeCount] = {};
    if (warned[domain].fetch_add(1) == 0) {
      log_warn("composite '" + std::string(cohort::kCompositeNames[domain]) +
               "' value " + std::to_string(z) + " outside [" + std::to_string(r.lo) +
               "," + std::to_string(r.hi) + "], clamped (further warnings suppressed)");
    }
    z = std::clamp(z, r.lo, r.hi);
  }
  return (z - r.lo) / (r.hi - r.lo);
}

double composite_from_unit(double u, int domain) {
  const CompositeRange r = composite_range(domain);
  return r.lo + u * (r.hi - r.lo);
}

std::vector<std::vector<double>> compute_time_gaps(
    const std::vector<std::vector<bool>>& masks, const std::vector<int>& months) {
  if (masks.size() != months.size()) {
    throw DimensionError("compute_time_gaps: mask rows and months differ");
  }
  require_increasing(months, "compute_time_gaps");
  const std::size_t T = masks.size();
  std::vector<std::vector<double>> delta(T);
  if (T == 0) return delta;
  const std::size_t d = masks[0].size();
  delta[0].assign(d, 0.0);
  for (std::size_t t = 1; t < T; ++t) {
    if (masks[t].size() != d) {
      throw DimensionError("compute_time_gaps: ragged mask rows");
    }
    delta[t].resize(d);
    const double gap = months[t] - months[t - 1];
    for (std::size_t j = 0; j < d; ++j) {
      delta[t][j] = masks[t - 1][j] ? gap : delta[t - 1][j] + gap;
    }
  }
  return delta;
}

namespace {

SeqInput build_stream(const cohort::Subject& s, bool imaging,
                      const ScalerParams& params) {
  const int d = imaging ? kImagingDim : kCognitionDim;
  const int offset = imaging ? kImagingOffset : kCognitionOffset;
  const int T = static_cast<int>(s.visits.size());

  SeqInput out;
  out.T = T;
  out.d = d;
  out.x.assign(static_cast<std::size_t>(T) * d, 0.0);
  out.mask.assign(static_cast<std::size_t>(T) * d, 0.0);

  std::vector<std::vector<bool>> masks(T);
  std::vector<int> months(T);
  for (int t = 0; t < T; ++t) {
    const cohort::Visit& v = s.visits[t];
    months[t] = v.month;
    const std::vector<bool>& vm = imaging ? v.imaging_mask : v.cognition_mask;
    masks[t] = vm;
    std::vector<double> raw = imaging ? icv_normalize(v.imaging, s.icv) : v.cognition;
    for (int j = 0; j < d; ++j) {
      if (!vm[j]) continue;
      out.x[static_cast<std::size_t>(t) * d + j] =
          apply_scaler_one(raw[j], offset + j, params);
      out.mask[static_cast<std::size_t>(t) * d + j] = 1.0;
    }
  }

  const auto fwd = compute_time_gaps(masks, months);
  std::vector<std::vector<bool>> rmasks(masks.rbegin(), masks.rend());
  std::vector<int> rmonths(T);
  if (T > 0) {
    rmonths[0] = 0;
    for (int k = 1; k < T; ++k) {
      rmonths[k] = rmonths[k - 1] + (months[T - k] - months[T - k - 1]);
    }
  }
  const auto bwd = compute_time_gaps(rmasks, rmonths);

  out.delta_fwd.resize(static_cast<std::size_t>(T) * d);
  out.delta_bwd.resize(static_cast<std::size_t>(T) * d);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < d; ++j) {
      out.delta_fwd[static_cast<std::size_t>(t) * d + j] = fwd[t][j];
      out.delta_bwd[static_cast<std::size_t>(t) * d + j] = bwd[t][j];
    }
  }
  return out;
}

}  // namespace

std::vector<ModelInput> build_model_inputs(const cohort::Cohort& cohort,
                                           const ScalerParams& params) {
  if (params.fingerprint != feature_fingerprint()) {
    throw UsageError("scaler feature ordering '" + params.fingerprint +
                     "' does not match this build's '" + feature_fingerprint() + "'");
  }
  std::vector<ModelInput> out;
  for (const cohort::Subject& s : cohort.subjects) {
    if (s.group == cohort::Group::Excluded) continue;
    auto labels = cohort::build_labels(s);
    if (!labels) continue;

    ModelInput in;
    in.subject_id = s.id;
    in.T = labels->T;
    in.months.reserve(s.visits.size());
    for (const cohort::Visit& v : s.visits) in.months.push_back(v.month);
    in.imaging = build_stream(s, /*imaging=*/true, params);
    in.cognition = build_stream(s, /*imaging=*/false, params);
    in.clinical = encode_clinical(s.clinical, params);
    in.aux_targets_unit.resize(labels->T);
    for (int t = 0; t < labels->T; ++t) {
      for (int c = 0; c < kCompositeCount; ++c) {
        in.aux_targets_unit[t][c] =
            labels->aux_mask[t][c] ? composite_unit_scale(labels->aux_targets[t][c], c)
                                   : 0.0;
      }
    }
    in.labels = std::move(*labels);
    out.push_back(std::move(in));
  }
  return out;
}

}  // namespace adrisk::prep
