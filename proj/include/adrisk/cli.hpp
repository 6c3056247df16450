#pragma once

#include <array>
#include <string>
#include <vector>

#include "adrisk/model.hpp"
#include "adrisk/preprocess.hpp"

namespace adrisk::cli {

// One visit of an explanation trace. Values a mode does not produce, and
// ground truth that was never observed, are NaN.
struct TraceRow {
  int month = 0;
  double risk = 0.0;
  std::array<double, 4> pred_z{};     // forecasted composites, Z scale
  std::array<double, 4> truth_z{};    // observed targets, Z scale
  std::array<double, 4> relevance{};  // sigmoid-bounded, no re-normalization
  double label = 0.0;                 // 0/1 outcome, NaN where unscored
};

struct ExplanationTrace {
  std::string subject_id;
  std::vector<TraceRow> rows;  // one per visit, in visit order
};

// Eval-mode forward pass for one subject, composites mapped back to the
// Z scale. Relevance is exported exactly as the sigmoid produced it, so the
// risk column stays reproducible from the exported composites and weights.
ExplanationTrace explain_subject(const model::ModelParams& params,
                                 const prep::ModelInput& input);

// Wide per-subject table: month, risk, predictions, truths, relevance, label.
void write_trace(const ExplanationTrace& trace, const std::string& path);

// Long-format plot data over many subjects: one record per visit and series,
// NaN entries skipped.
void write_traces_long(const std::vector<ExplanationTrace>& traces,
                       const std::string& path);

// Exclusive ownership of an output directory for one command: creates
// dir/.lock exclusively, removes it on destruction. UsageError when another
// run already holds the directory.
class OutputLock {
 public:
  explicit OutputLock(const std::string& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
};

// Command-line driver. args excludes the program name. Exit codes: 0 ok,
// 1 usage, 2 configuration or data, 3 numeric failure.
int run_cli(std::vector<std::string> args);
int run_cli(int argc, const char* const* argv);

}  // namespace adrisk::cli
