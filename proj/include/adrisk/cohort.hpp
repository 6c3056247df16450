#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adrisk::cohort {

inline constexpr int kImagingDim = 90;
inline constexpr int kCognitionDim = 13;
inline constexpr int kClinicalDim = 18;  // 2 demographics + 6 vitals + 10 binary flags
inline constexpr int kCompositeCount = 4;
inline constexpr int kVisitInterval = 6;   // months
inline constexpr int kFollowupMonths = 60;

// Composite cognitive domains, in fixed order.
enum class CompositeDomain { Memory, Executive, Language, VisualSpatial };
inline constexpr std::array<std::string_view, kCompositeCount> kCompositeNames = {
    "memory", "executive", "language", "visual_spatial"};

enum class Diagnosis { Missing, CN, MCI, AD };
enum class Group { Excluded, Smci, Pmci };

Diagnosis diagnosis_from_string(std::string_view s);  // EMCI/LMCI collapse to MCI
std::string_view to_string(Diagnosis d);
Group group_from_string(std::string_view s);
std::string_view to_string(Group g);

// One scheduled assessment. Values whose observation flag is false are
// ignored by every downstream computation.
struct Visit {
  int month = 0;
  Diagnosis diagnosis = Diagnosis::Missing;
  std::vector<double> imaging;        // kImagingDim
  std::vector<bool> imaging_mask;
  std::vector<double> cognition;      // kCognitionDim
  std::vector<bool> cognition_mask;
  std::vector<double> composites;     // kCompositeCount, Z-scale
  std::vector<bool> composite_mask;

  static Visit empty(int month);
  bool imaging_any() const;
  bool cognition_any() const;
};

struct Subject {
  std::string id;
  Group group = Group::Excluded;
  std::vector<double> clinical;  // kClinicalDim raw values: age, sex(0/1), 6 vitals, 10 flags
  double icv = 0.0;              // intracranial volume, recorded at baseline
  std::vector<Visit> visits;     // month-ordered
};

struct Cohort {
  std::vector<Subject> subjects;

  std::size_t size() const { return subjects.size(); }
};

// Per-visit supervision for one subject. y_t answers "is the next recorded
// visit an AD visit"; auxiliary targets are the next visit's composite
// scores on the Z scale, masked per domain when unobserved.
struct LabeledSequence {
  std::string subject_id;
  int T = 0;
  std::vector<double> y;
  std::vector<bool> y_mask;
  std::vector<std::array<double, kCompositeCount>> aux_targets;
  std::vector<std::array<bool, kCompositeCount>> aux_mask;
};

// Replaces each missing diagnosis with the most recent recorded one.
// Recorded entries are untouched. The baseline diagnosis must be recorded.
std::vector<Visit> forward_fill_diagnosis(std::vector<Visit> visits);

// Assigns the outcome group from a forward-filled, month-ordered trajectory:
// any CN after the MCI baseline excludes the subject; a first AD visit
// within the follow-up window makes it pMCI with later visits dropped;
// otherwise sMCI. Months must be strictly increasing.
Subject classify_and_trim(Subject subject);

// Builds the per-visit labels and next-visit composite targets for a
// classified subject. Returns nothing (with a warning) when fewer than two
// visits survive trimming.
std::optional<LabeledSequence> build_labels(const Subject& subject);

// Baseline screening + forward fill + classification for every subject.
// Subjects failing inclusion keep group Excluded and the reason is logged.
Cohort classify_cohort(Cohort raw);

// All labeled sequences for the non-excluded subjects of a classified cohort.
std::vector<LabeledSequence> label_cohort(const Cohort& cohort);

struct SplitRatios {
  int train = 75;
  int val = 15;
  int test = 10;
};

struct CohortSplit {
  Cohort train;
  Cohort val;
  Cohort test;
};

// Subject-level disjoint partition by shuffled assignment. The validation
// count rounds down and the test count rounds up, which reproduces both
// pinned size examples; every remaining subject trains.
CohortSplit split_cohort(const Cohort& cohort, SplitRatios ratios, std::uint64_t seed);

}  // namespace adrisk::cohort
