#pragma once

#include <string>

#include "adrisk/cohort.hpp"

namespace adrisk::cohort {

// Writes subjects.csv and visits.csv under dir (created if needed).
// Unobserved values become empty cells; doubles use the shortest
// round-trippable decimal form, so write-then-read is lossless.
void write_cohort(const Cohort& cohort, const std::string& dir);

// Reads a cohort written by write_cohort (or equivalent external files).
// Schema violations raise IngestError naming the file, row, and column.
Cohort read_cohort(const std::string& dir);

}  // namespace adrisk::cohort
