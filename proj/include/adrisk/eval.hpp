#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adrisk/model.hpp"
#include "adrisk/preprocess.hpp"
#include "adrisk/train.hpp"

namespace adrisk::eval {

// Probability that a random positive outranks a random negative, ties
// credited one half (Mann-Whitney formulation). NumericError when labels
// hold a single class.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Average precision: precision accumulated at each positive's rank over
// descending scores; ties keep stable input order. NumericError without a
// positive.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

// Masked mean squared error. NumericError when the mask never fires.
double regression_mse(const std::vector<double>& pred,
                      const std::vector<double>& target,
                      const std::vector<bool>& mask);

struct BootstrapCi {
  double lower = 0, upper = 0, point = 0;
};

// Metric over a multiset of subject indices (a bootstrap resample or the
// identity set). Throws NumericError where undefined.
using MetricFn = std::function<double(const std::vector<int>&)>;

// B participant resamples with replacement. Each resample draws from its own
// stream derived from (seed, resample index, attempt), so results never
// depend on evaluation order; a resample rejected by `valid` is redrawn, at
// most 10 attempts each, after which NumericError.
std::vector<std::vector<int>> draw_resamples(
    int n_subjects, int B, std::uint64_t seed,
    const std::function<bool(const std::vector<int>&)>& valid = {});

// Evaluates fn over the resamples, optionally across threads; the result is
// ordered by resample index and therefore independent of thread count.
// fn must be safe to call concurrently.
std::vector<double> metric_over_resamples(const MetricFn& fn,
                                          const std::vector<std::vector<int>>& rs,
                                          int n_threads = 1);

// (2*point - Q(1-a/2), 2*point - Q(a/2)) with linear-interpolation quantiles.
BootstrapCi pivot_ci_from_values(double point, std::vector<double> values,
                                 double alpha);

// Full pivot pipeline: point on the identity set, resamples redrawn while fn
// is undefined on them, CI from the pivot quantiles.
BootstrapCi pivot_bootstrap_ci(const MetricFn& fn, int n_subjects, int B,
                               double alpha, std::uint64_t seed,
                               int n_threads = 1);

struct WilcoxonResult {
  double p = 1.0;
  double statistic = 0.0;  // W+ over the nonzero differences
  int n = 0;               // pairs remaining after dropping zero differences
  bool degenerate = false;
};

// Two-sided signed-rank test on paired samples: zero differences dropped,
// midranks over |d|, exact enumeration for n <= 20, tie-adjusted normal
// approximation with continuity correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                    const std::vector<double>& y);

// Benjamini-Hochberg step-up, monotone and capped at 1, input order kept.
std::vector<double> bh_adjust(const std::vector<double>& pvals);

// Visit-level predictions pooled over a test split, with the owning subject
// recorded so participant resampling can gather them.
struct TestScores {
  int n_subjects = 0;
  std::vector<double> risk;
  std::vector<int> y;
  std::vector<int> risk_subject;
  // composite regression on the Z scale
  std::array<std::vector<double>, 4> pred_z, target_z;
  std::array<std::vector<int>, 4> z_subject;
};

TestScores score_subjects(const model::ModelParams& params,
                          const std::vector<prep::ModelInput>& subjects);

struct ModelReport {
  std::string name;
  bool proposed = false;
  BootstrapCi auroc, auprc;
  std::array<BootstrapCi, 4> mse;  // Z scale, domain order of the composites
  // pairwise-versus-proposed tests on resample-paired metric values; NaN for
  // the proposed row itself
  double p_auroc = 0, p_auroc_adj = 0, p_auprc = 0, p_auprc_adj = 0;
};

struct EvalReport {
  std::vector<ModelReport> models;
  int proposed_index = 0;
  std::uint64_t seed = 0;
  int B = 0;
  double alpha = 0.05;
  int n_test_subjects = 0;
  int n_test_visits = 0;
};

// Shared resample indices across models; per-model pivot CIs; Wilcoxon on
// the paired per-resample AUROC/AUPRC vectors against the proposed model,
// BH-adjusted within each metric family.
EvalReport compare_models(const std::vector<const model::ModelParams*>& models,
                          const std::vector<std::string>& names,
                          int proposed_index,
                          const std::vector<prep::ModelInput>& test_subjects,
                          int B, double alpha, std::uint64_t seed,
                          int n_threads = 1);

// metrics.csv (one row per model) and report.json under dir.
void write_eval_report(const EvalReport& report, const std::string& dir);

struct AblationRow {
  bool use_imaging = false, use_cognition = false, use_clinical = false;
  ModelReport report;
};

// Trains and scores every non-empty modality subset with identical seeds and
// splits. Rows are ordered single modalities first, then pairs, then all
// three, each echoing its subset flags.
std::vector<AblationRow> run_ablation(
    const model::ModelConfig& base, const std::vector<prep::ModelInput>& train_set,
    const std::vector<prep::ModelInput>& val_set,
    const std::vector<prep::ModelInput>& test_set, const train::TrainConfig& tcfg,
    int B, double alpha, std::uint64_t bootstrap_seed);

void write_ablation(const std::vector<AblationRow>& rows, const std::string& path);

}  // namespace adrisk::eval
