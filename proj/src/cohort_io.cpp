#include "adrisk/cohort_io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "adrisk/errors.hpp"

namespace adrisk::cohort {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::array<const char*, kClinicalDim> kClinicalColumns = {
    "age",       "sex",      "education", "mmse",      "sbp",       "dbp",
    "heart_rate", "bmi",     "comorb_00", "comorb_01", "comorb_02", "comorb_03",
    "comorb_04", "comorb_05", "comorb_06", "comorb_07", "comorb_08", "comorb_09"};

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

struct RowContext {
  const std::string& file;
  int row;  // 1-based, header is row 1
  const std::vector<std::string>* header;
};

[[noreturn]] void fail(const RowContext& ctx, int col, const std::string& what) {
  std::string name = ctx.header && col < static_cast<int>(ctx.header->size())
                         ? (*ctx.header)[col]
                         : std::to_string(col);
  throw IngestError(ctx.file + " row " + std::to_string(ctx.row) + " column '" + name +
                    "': " + what);
}

double parse_double(const RowContext& ctx, const std::vector<std::string>& cells, int col) {
  const std::string& s = cells[col];
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    fail(ctx, col, "cannot parse '" + s + "' as a number");
  }
  return v;
}

int parse_int(const RowContext& ctx, const std::vector<std::string>& cells, int col) {
  const std::string& s = cells[col];
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    fail(ctx, col, "cannot parse '" + s + "' as an integer");
  }
  return v;
}

// empty cell = unobserved
bool parse_optional(const RowContext& ctx, const std::vector<std::string>& cells, int col,
                    double& out) {
  if (cells[col].empty()) {
    out = kNaN;
    return false;
  }
  out = parse_double(ctx, cells, col);
  return true;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IngestError("cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IngestError("cannot open '" + path + "' for reading");
  return f;
}

}  // namespace

void write_cohort(const Cohort& cohort, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string subjects_path = dir + "/subjects.csv";
  const std::string visits_path = dir + "/visits.csv";

  std::ofstream sf = open_out(subjects_path);
  sf << "id,group";
  for (const char* c : kClinicalColumns) sf << ',' << c;
  sf << ",icv\n";
  for (const Subject& s : cohort.subjects) {
    if (static_cast<int>(s.clinical.size()) != kClinicalDim) {
      throw IngestError("subject '" + s.id + "': clinical vector must have " +
                        std::to_string(kClinicalDim) + " values");
    }
    sf << s.id << ',' << to_string(s.group);
    for (double v : s.clinical) {
      sf << ',';
      if (std::isfinite(v)) sf << format_double(v);
    }
    sf << ',' << format_double(s.icv) << '\n';
  }

  std::ofstream vf = open_out(visits_path);
  vf << "id,month,diagnosis";
  for (int j = 0; j < kImagingDim; ++j) vf << ",img_" << (j < 10 ? "0" : "") << j;
  for (int j = 0; j < kCognitionDim; ++j) vf << ",cog_" << (j < 10 ? "0" : "") << j;
  for (auto name : kCompositeNames) vf << ',' << name;
  vf << '\n';
  for (const Subject& s : cohort.subjects) {
    for (const Visit& v : s.visits) {
      vf << s.id << ',' << v.month << ',' << to_string(v.diagnosis);
      for (int j = 0; j < kImagingDim; ++j) {
        vf << ',';
        if (v.imaging_mask[j]) vf << format_double(v.imaging[j]);
      }
      for (int j = 0; j < kCognitionDim; ++j) {
        vf << ',';
        if (v.cognition_mask[j]) vf << format_double(v.cognition[j]);
      }
      for (int j = 0; j < kCompositeCount; ++j) {
        vf << ',';
        if (v.composite_mask[j]) vf << format_double(v.composites[j]);
      }
      vf << '\n';
    }
  }
}

Cohort read_cohort(const std::string& dir) {
  const std::string subjects_path = dir + "/subjects.csv";
  const std::string visits_path = dir + "/visits.csv";

  Cohort out;
  std::unordered_map<std::string, std::size_t> index;

  {
    std::ifstream f = open_in(subjects_path);
    std::string line;
    if (!std::getline(f, line)) throw IngestError(subjects_path + ": empty file");
    const std::vector<std::string> header = split_line(line);
    const int want = 2 + kClinicalDim + 1;
    if (static_cast<int>(header.size()) != want) {
      throw IngestError(subjects_path + ": expected " + std::to_string(want) +
                        " columns, found " + std::to_string(header.size()));
    }
    int row = 1;
    while (std::getline(f, line)) {
      ++row;
      if (line.empty()) continue;
      const std::vector<std::string> cells = split_line(line);
      RowContext ctx{subjects_path, row, &header};
      if (cells.size() != header.size()) {
        throw IngestError(subjects_path + " row " + std::to_string(row) + ": expected " +
                          std::to_string(header.size()) + " cells, found " +
                          std::to_string(cells.size()));
      }
      Subject s;
      s.id = cells[0];
      if (s.id.empty()) fail(ctx, 0, "empty subject id");
      if (index.count(s.id)) fail(ctx, 0, "duplicate subject id '" + s.id + "'");
      try {
        s.group = group_from_string(cells[1]);
      } catch (const IngestError& e) {
        fail(ctx, 1, e.what());
      }
      s.clinical.resize(kClinicalDim, kNaN);
      for (int j = 0; j < kClinicalDim; ++j) {
        parse_optional(ctx, cells, 2 + j, s.clinical[j]);
      }
      const int icv_col = 2 + kClinicalDim;
      if (cells[icv_col].empty()) {
        s.icv = 0.0;  // screened out later with a logged reason
      } else {
        s.icv = parse_double(ctx, cells, icv_col);
        if (!(s.icv > 0.0)) fail(ctx, icv_col, "intracranial volume must be positive");
      }
      index.emplace(s.id, out.subjects.size());
      out.subjects.push_back(std::move(s));
    }
  }

  {
    std::ifstream f = open_in(visits_path);
    std::string line;
    if (!std::getline(f, line)) throw IngestError(visits_path + ": empty file");
    const std::vector<std::string> header = split_line(line);
    const int want = 3 + kImagingDim + kCognitionDim + kCompositeCount;
    if (static_cast<int>(header.size()) != want) {
      throw IngestError(visits_path + ": expected " + std::to_string(want) +
                        " columns, found " + std::to_string(header.size()));
    }
    int row = 1;
    while (std::getline(f, line)) {
      ++row;
      if (line.empty()) continue;
      const std::vector<std::string> cells = split_line(line);
      RowContext ctx{visits_path, row, &header};
      if (cells.size() != header.size()) {
        throw IngestError(visits_path + " row " + std::to_string(row) + ": expected " +
                          std::to_string(header.size()) + " cells, found " +
                          std::to_string(cells.size()));
      }
      auto it = index.find(cells[0]);
      if (it == index.end()) fail(ctx, 0, "visit references unknown subject '" + cells[0] + "'");

      Visit v = Visit::empty(0);
      v.month = parse_int(ctx, cells, 1);
      if (v.month < 0 || v.month > kFollowupMonths || v.month % kVisitInterval != 0) {
        fail(ctx, 1, "month must be a multiple of " + std::to_string(kVisitInterval) +
                         " in [0," + std::to_string(kFollowupMonths) + "], got " +
                         std::to_string(v.month));
      }
      try {
        v.diagnosis = diagnosis_from_string(cells[2]);
      } catch (const IngestError& e) {
        fail(ctx, 2, e.what());
      }
      int col = 3;
      for (int j = 0; j < kImagingDim; ++j, ++col) {
        v.imaging_mask[j] = parse_optional(ctx, cells, col, v.imaging[j]);
      }
      for (int j = 0; j < kCognitionDim; ++j, ++col) {
        v.cognition_mask[j] = parse_optional(ctx, cells, col, v.cognition[j]);
      }
      for (int j = 0; j < kCompositeCount; ++j, ++col) {
        v.composite_mask[j] = parse_optional(ctx, cells, col, v.composites[j]);
      }
      out.subjects[it->second].visits.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace adrisk::cohort
