#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "adrisk/cohort.hpp"

namespace adrisk::prep {

// Continuous feature layout shared by the scaler and every consumer:
// ICV-normalized imaging volumes, cognition scores, age, then the six
// continuous clinical measures.
inline constexpr int kImagingOffset = 0;
inline constexpr int kCognitionOffset = cohort::kImagingDim;
inline constexpr int kAgeFeature = cohort::kImagingDim + cohort::kCognitionDim;
inline constexpr int kVitalsOffset = kAgeFeature + 1;
inline constexpr int kVitalCount = 6;
inline constexpr int kContinuousFeatures = kVitalsOffset + kVitalCount;  // 110

std::string feature_name(int feature);   // img_00 ... bmi
std::string feature_fingerprint();       // canonical ordering tag

// Per-feature clip bounds and post-clip extrema, fitted on the training
// fold only.
struct ScalerParams {
  std::vector<double> p1;
  std::vector<double> p99;
  std::vector<double> lo;
  std::vector<double> hi;
  std::string fingerprint;
};

// Linear-interpolation percentile over the order statistics.
double percentile(std::vector<double> values, double p);

// Element-wise division by the intracranial volume. Applied before any
// scaler fitting so head size never reaches the model.
std::vector<double> icv_normalize(const std::vector<double>& volumes, double icv);

ScalerParams fit_scaler(const cohort::Cohort& train);

// Clip to [p1,p99], then map linearly onto [0,1] by the training extrema.
// Entries whose mask is false pass through untouched; constant features
// map to 0.
std::vector<double> apply_scaler(const std::vector<double>& features,
                                 const std::vector<bool>& mask,
                                 const ScalerParams& params);
double apply_scaler_one(double value, int feature, const ScalerParams& params);

// "M"/"F" -> 1/0; anything else is an ingestion error.
double sex_indicator(std::string_view token);

// Raw 18-slot clinical vector -> model-ready vector: age and the six
// continuous measures scaled, the sex indicator and the ten binary flags
// passed through after validation.
std::vector<double> encode_clinical(const std::vector<double>& raw,
                                    const ScalerParams& params);

struct CompositeRange {
  double lo;
  double hi;
};
CompositeRange composite_range(int domain);  // ConfigError when unknown

// Z score -> [0,1] within the domain's published range, clamping (with a
// warning) out-of-range inputs; the inverse is exact on [0,1].
double composite_unit_scale(double z, int domain);
double composite_from_unit(double u, int domain);

// BRITS gap recurrence: time since each feature was last observed.
std::vector<std::vector<double>> compute_time_gaps(
    const std::vector<std::vector<bool>>& masks, const std::vector<int>& months);

// One modality stream of one subject, ready for tensor assembly: scaled
// values (zero where unobserved), 0/1 masks, and the per-direction gap
// matrices. delta_bwd[k] belongs to reversed step k, i.e. visit T-1-k.
struct SeqInput {
  int T = 0;
  int d = 0;
  std::vector<double> x;
  std::vector<double> mask;
  std::vector<double> delta_fwd;
  std::vector<double> delta_bwd;
};

struct ModelInput {
  std::string subject_id;
  int T = 0;
  std::vector<int> months;
  SeqInput imaging;
  SeqInput cognition;
  std::vector<double> clinical;
  cohort::LabeledSequence labels;  // auxiliary targets on the Z scale
  std::vector<std::array<double, cohort::kCompositeCount>> aux_targets_unit;
};

// Full per-subject assembly for the non-excluded subjects of a classified
// cohort; subjects too short to label are skipped (with the usual warning).
std::vector<ModelInput> build_model_inputs(const cohort::Cohort& cohort,
                                           const ScalerParams& params);

}  // namespace adrisk::prep
