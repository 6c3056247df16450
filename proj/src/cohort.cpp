#include "adrisk/cohort.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "adrisk/errors.hpp"
#include "adrisk/log.hpp"
#include "adrisk/rng.hpp"

namespace adrisk::cohort {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool all_observed(const std::vector<bool>& mask) {
  for (bool b : mask) {
    if (!b) return false;
  }
  return true;
}

bool clinical_complete(const std::vector<double>& clinical) {
  if (static_cast<int>(clinical.size()) != kClinicalDim) return false;
  for (double v : clinical) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

Diagnosis diagnosis_from_string(std::string_view s) {
  if (s.empty()) return Diagnosis::Missing;
  if (s == "CN") return Diagnosis::CN;
  if (s == "MCI" || s == "EMCI" || s == "LMCI") return Diagnosis::MCI;
  if (s == "AD") return Diagnosis::AD;
  throw IngestError("unknown diagnosis '" + std::string(s) + "'");
}

std::string_view to_string(Diagnosis d) {
  switch (d) {
    case Diagnosis::Missing: return "";
    case Diagnosis::CN: return "CN";
    case Diagnosis::MCI: return "MCI";
    case Diagnosis::AD: return "AD";
  }
  return "";
}

Group group_from_string(std::string_view s) {
  if (s == "pMCI") return Group::Pmci;
  if (s == "sMCI") return Group::Smci;
  if (s == "excluded") return Group::Excluded;
  throw IngestError("unknown group '" + std::string(s) + "'");
}

std::string_view to_string(Group g) {
  switch (g) {
    case Group::Excluded: return "excluded";
    case Group::Smci: return "sMCI";
    case Group::Pmci: return "pMCI";
  }
  return "excluded";
}

Visit Visit::empty(int month) {
  Visit v;
  v.month = month;
  v.imaging.assign(kImagingDim, kNaN);
  v.imaging_mask.assign(kImagingDim, false);
  v.cognition.assign(kCognitionDim, kNaN);
  v.cognition_mask.assign(kCognitionDim, false);
  v.composites.assign(kCompositeCount, kNaN);
  v.composite_mask.assign(kCompositeCount, false);
  return v;
}

bool Visit::imaging_any() const {
  for (bool b : imaging_mask) {
    if (b) return true;
  }
  return false;
}

bool Visit::cognition_any() const {
  for (bool b : cognition_mask) {
    if (b) return true;
  }
  return false;
}

std::vector<Visit> forward_fill_diagnosis(std::vector<Visit> visits) {
  if (visits.empty()) return visits;
  if (visits.front().diagnosis == Diagnosis::Missing) {
    throw IngestError("baseline diagnosis missing; cannot forward fill");
  }
  Diagnosis last = visits.front().diagnosis;
  for (Visit& v : visits) {
    if (v.diagnosis == Diagnosis::Missing) {
      v.diagnosis = last;
    } else {
      last = v.diagnosis;
    }
  }
  return visits;
}

Subject classify_and_trim(Subject subject) {
  for (std::size_t i = 1; i < subject.visits.size(); ++i) {
    if (subject.visits[i].month <= subject.visits[i - 1].month) {
      throw IngestError("subject '" + subject.id + "': visit months not strictly increasing");
    }
  }
  int first_ad = -1;
  for (std::size_t i = 0; i < subject.visits.size(); ++i) {
    const Visit& v = subject.visits[i];
    if (v.diagnosis == Diagnosis::CN) {
      subject.group = Group::Excluded;
      return subject;
    }
    if (first_ad < 0 && v.diagnosis == Diagnosis::AD && v.month <= kFollowupMonths) {
      first_ad = static_cast<int>(i);
    }
  }
  if (first_ad >= 0) {
    subject.group = Group::Pmci;
    subject.visits.resize(first_ad + 1);  // keep the progression visit itself
  } else {
    subject.group = Group::Smci;
    while (!subject.visits.empty() && subject.visits.back().month > kFollowupMonths) {
      subject.visits.pop_back();
    }
  }
  return subject;
}

std::optional<LabeledSequence> build_labels(const Subject& subject) {
  if (subject.group == Group::Excluded) {
    log_warn("subject '" + subject.id + "': excluded, no labels built");
    return std::nullopt;
  }
  const int T = static_cast<int>(subject.visits.size());
  if (T < 2) {
    log_warn("subject '" + subject.id + "': fewer than 2 visits after trimming, dropped");
    return std::nullopt;
  }
  LabeledSequence seq;
  seq.subject_id = subject.id;
  seq.T = T;
  seq.y.resize(T, 0.0);
  seq.y_mask.assign(T, true);
  seq.aux_targets.resize(T);
  seq.aux_mask.resize(T);
  for (int t = 0; t < T; ++t) {
    // past the last visit the filled diagnosis persists, so the progression
    // visit of a converter is itself labeled positive
    const Diagnosis next =
        (t + 1 < T) ? subject.visits[t + 1].diagnosis : subject.visits[T - 1].diagnosis;
    seq.y[t] = next == Diagnosis::AD ? 1.0 : 0.0;
    seq.aux_targets[t].fill(0.0);
    seq.aux_mask[t].fill(false);
    if (t + 1 < T) {
      const Visit& nv = subject.visits[t + 1];
      for (int c = 0; c < kCompositeCount; ++c) {
        if (nv.composite_mask[c]) {
          seq.aux_targets[t][c] = nv.composites[c];
          seq.aux_mask[t][c] = true;
        }
      }
    }
  }
  return seq;
}

Cohort classify_cohort(Cohort raw) {
  for (Subject& s : raw.subjects) {
    const Visit* baseline =
        (!s.visits.empty() && s.visits.front().month == 0) ? &s.visits.front() : nullptr;
    std::string reason;
    if (baseline == nullptr) {
      reason = "no baseline visit at month 0";
    } else if (baseline->diagnosis != Diagnosis::MCI) {
      reason = "baseline diagnosis is not MCI";
    } else if (!all_observed(baseline->imaging_mask)) {
      reason = "baseline imaging incomplete";
    } else if (!all_observed(baseline->cognition_mask)) {
      reason = "baseline cognition incomplete";
    } else if (!clinical_complete(s.clinical)) {
      reason = "baseline clinical data incomplete";
    } else if (!(s.icv > 0.0)) {
      reason = "intracranial volume missing";
    }
    if (!reason.empty()) {
      s.group = Group::Excluded;
      log_warn("subject '" + s.id + "' excluded: " + reason);
      continue;
    }
    s.visits = forward_fill_diagnosis(std::move(s.visits));
    s = classify_and_trim(std::move(s));
    if (s.group == Group::Excluded) {
      log_warn("subject '" + s.id + "' excluded: reverted to CN during follow-up");
    }
  }
  return raw;
}

std::vector<LabeledSequence> label_cohort(const Cohort& cohort) {
  std::vector<LabeledSequence> out;
  out.reserve(cohort.size());
  for (const Subject& s : cohort.subjects) {
    if (s.group == Group::Excluded) continue;
    if (auto seq = build_labels(s)) out.push_back(std::move(*seq));
  }
  return out;
}

CohortSplit split_cohort(const Cohort& cohort, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0 ||
      ratios.train + ratios.val + ratios.test != 100) {
    throw ConfigError("split ratios must be positive and sum to 100");
  }
  const std::size_t n = cohort.size();
  const std::size_t n_val = n * static_cast<std::size_t>(ratios.val) / 100;
  const std::size_t n_test = (n * static_cast<std::size_t>(ratios.test) + 99) / 100;
  if (n_val + n_test > n) {
    throw ConfigError("cohort too small to split with the requested ratios");
  }
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto eng = rng::make_engine(seed, "cohort-split");
  rng::shuffle(order, eng);

  CohortSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    const Subject& s = cohort.subjects[order[i]];
    if (i < n_train) {
      split.train.subjects.push_back(s);
    } else if (i < n_train + n_val) {
      split.val.subjects.push_back(s);
    } else {
      split.test.subjects.push_back(s);
    }
  }
  return split;
}

}  // namespace adrisk::cohort
