#include "adrisk/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "adrisk/cohort.hpp"
#include "adrisk/errors.hpp"
#include "adrisk/rng.hpp"

#include "../vendor/json.hpp"

namespace adrisk::eval {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_binary(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DimensionError("scores and labels differ in length");
  for (int v : labels)
    if (v != 0 && v != 1) throw UsageError("labels must be 0 or 1");
}

std::string fmt(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_binary(scores, labels);
  const int n = static_cast<int>(scores.size());
  long long pos = std::count(labels.begin(), labels.end(), 1);
  long long neg = n - pos;
  if (pos == 0 || neg == 0)
    throw NumericError("auroc undefined: labels hold a single class");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  // midranks over score ties; the positive-rank sum gives the Mann-Whitney U
  double rank_pos = 0.0;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double mid = 0.5 * ((i + 1) + j);  // 1-based average rank of the tie block
    for (int k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_pos += mid;
    i = j;
  }
  double u = rank_pos - 0.5 * static_cast<double>(pos) * (pos + 1);
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_binary(scores, labels);
  const int n = static_cast<int>(scores.size());
  long long pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0) throw NumericError("auprc undefined: no positive labels");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });

  // average precision: precision sampled at each positive, walking the
  // ranking from the top; equal scores keep their input order
  double sum = 0.0;
  int hits = 0;
  for (int k = 0; k < n; ++k) {
    if (labels[order[k]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / (k + 1);
    }
  }
  return sum / static_cast<double>(pos);
}

double regression_mse(const std::vector<double>& pred,
                      const std::vector<double>& target,
                      const std::vector<bool>& mask) {
  if (pred.size() != target.size() || pred.size() != mask.size())
    throw DimensionError("regression_mse inputs differ in length");
  double sum = 0.0;
  long long count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    double d = pred[i] - target[i];
    sum += d * d;
    ++count;
  }
  if (count == 0) throw NumericError("regression_mse undefined: empty mask");
  return sum / static_cast<double>(count);
}

namespace {

// Stream for resample r, attempt a. Attempts are capped at 10, so the
// (index, attempt) pair packs into one stream index without collisions.
rng::Engine resample_engine(std::uint64_t seed, int r, int attempt) {
  return rng::make_engine(seed, "bootstrap",
                          static_cast<std::uint64_t>(r) * 16u + attempt);
}

std::vector<int> draw_one(rng::Engine& eng, int n_subjects) {
  std::vector<int> idx(n_subjects);
  for (int& v : idx) v = static_cast<int>(rng::below(eng, n_subjects));
  return idx;
}

void check_draw_args(int n_subjects, int B) {
  if (n_subjects <= 0) throw UsageError("bootstrap needs at least one subject");
  if (B <= 0) throw UsageError("bootstrap needs a positive resample count");
}

// Runs body(r) for r in [0, B) across n_threads, rethrowing the first
// captured exception in thread order.
void parallel_for(int B, int n_threads, const std::function<void(int)>& body) {
  if (n_threads < 1) throw UsageError("thread count must be positive");
  if (n_threads == 1) {
    for (int r = 0; r < B; ++r) body(r);
    return;
  }
  int used = std::min(n_threads, B);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(used);
  for (int t = 0; t < used; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int r = t; r < B; r += used) body(r);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<std::vector<int>> draw_resamples(
    int n_subjects, int B, std::uint64_t seed,
    const std::function<bool(const std::vector<int>&)>& valid) {
  check_draw_args(n_subjects, B);
  std::vector<std::vector<int>> out(B);
  for (int r = 0; r < B; ++r) {
    bool ok = false;
    for (int a = 0; a < 10 && !ok; ++a) {
      auto eng = resample_engine(seed, r, a);
      auto idx = draw_one(eng, n_subjects);
      if (!valid || valid(idx)) {
        out[r] = std::move(idx);
        ok = true;
      }
    }
    if (!ok)
      throw NumericError("bootstrap resample " + std::to_string(r) +
                         " still invalid after 10 attempts");
  }
  return out;
}

std::vector<double> metric_over_resamples(const MetricFn& fn,
                                          const std::vector<std::vector<int>>& rs,
                                          int n_threads) {
  std::vector<double> vals(rs.size());
  parallel_for(static_cast<int>(rs.size()), n_threads,
               [&](int r) { vals[r] = fn(rs[r]); });
  return vals;
}

BootstrapCi pivot_ci_from_values(double point, std::vector<double> values,
                                 double alpha) {
  if (values.empty()) throw UsageError("pivot CI needs resample values");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw UsageError("alpha must lie in (0, 1)");
  double q_hi = prep::percentile(values, (1.0 - alpha / 2) * 100.0);
  double q_lo = prep::percentile(std::move(values), alpha / 2 * 100.0);
  BootstrapCi ci;
  ci.point = point;
  ci.lower = 2.0 * point - q_hi;
  ci.upper = 2.0 * point - q_lo;
  return ci;
}

BootstrapCi pivot_bootstrap_ci(const MetricFn& fn, int n_subjects, int B,
                               double alpha, std::uint64_t seed, int n_threads) {
  check_draw_args(n_subjects, B);
  std::vector<int> identity(n_subjects);
  std::iota(identity.begin(), identity.end(), 0);
  double point = fn(identity);

  // a resample where the metric is undefined is redrawn from that resample's
  // next attempt stream, so the outcome never depends on evaluation order
  std::vector<double> vals(B);
  parallel_for(B, n_threads, [&](int r) {
    for (int a = 0; a < 10; ++a) {
      auto eng = resample_engine(seed, r, a);
      auto idx = draw_one(eng, n_subjects);
      try {
        vals[r] = fn(idx);
        return;
      } catch (const NumericError&) {
      }
    }
    throw NumericError("metric undefined on bootstrap resample " +
                       std::to_string(r) + " after 10 attempts");
  });
  return pivot_ci_from_values(point, std::move(vals), alpha);
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                    const std::vector<double>& y) {
  if (x.size() != y.size())
    throw DimensionError("wilcoxon needs paired samples of equal length");
  std::vector<double> d;
  d.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = x[i] - y[i];
    if (v != 0.0) d.push_back(v);
  }
  WilcoxonResult res;
  res.n = static_cast<int>(d.size());
  if (d.empty()) {
    res.degenerate = true;
    return res;  // every pair tied: no evidence either way
  }

  const int n = res.n;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::fabs(d[a]) < std::fabs(d[b]);
  });

  // doubled midranks stay integral, which keeps the exact tail enumeration
  // in integer arithmetic
  std::vector<long long> rank2(n);
  std::vector<long long> tie_sizes;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && std::fabs(d[order[j]]) == std::fabs(d[order[i]])) ++j;
    long long mid2 = (i + 1) + j;  // twice the average 1-based rank
    for (int k = i; k < j; ++k) rank2[order[k]] = mid2;
    tie_sizes.push_back(j - i);
    i = j;
  }

  long long w2 = 0;  // twice W+
  for (int k = 0; k < n; ++k)
    if (d[k] > 0.0) w2 += rank2[k];
  res.statistic = 0.5 * static_cast<double>(w2);

  if (n <= 20) {
    // exact null: every sign assignment equally likely, tally the subset
    // sums of the doubled ranks
    long long total = 0;
    for (long long r2 : rank2) total += r2;
    std::vector<double> count(total + 1, 0.0);
    count[0] = 1.0;
    for (long long r2 : rank2)
      for (long long s = total; s >= r2; --s) count[s] += count[s - r2];
    double lower_tail = 0.0, upper_tail = 0.0;
    for (long long s = 0; s <= total; ++s) {
      if (s <= w2) lower_tail += count[s];
      if (s >= w2) upper_tail += count[s];
    }
    double denom = std::ldexp(1.0, n);  // 2^n
    res.p = std::min(1.0, 2.0 * std::min(lower_tail, upper_tail) / denom);
    return res;
  }

  double mean = n * (n + 1) / 4.0;
  double var = n * (n + 1) * (2.0 * n + 1) / 24.0;
  for (long long t : tie_sizes) var -= (t * t * t - t) / 48.0;
  double diff = res.statistic - mean;
  double z = 0.0;
  if (var > 0.0 && diff != 0.0)
    z = (diff - (diff > 0 ? 0.5 : -0.5)) / std::sqrt(var);
  res.p = std::erfc(std::fabs(z) / std::sqrt(2.0));
  return res;
}

std::vector<double> bh_adjust(const std::vector<double>& pvals) {
  const int m = static_cast<int>(pvals.size());
  for (double p : pvals)
    if (!(p >= 0.0 && p <= 1.0))
      throw UsageError("p-values must lie in [0, 1]");
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return pvals[a] < pvals[b]; });
  std::vector<double> adj(m);
  double running = 1.0;  // step-up from the largest p
  for (int i = m - 1; i >= 0; --i) {
    double q = pvals[order[i]] * m / (i + 1);
    running = std::min(running, q);
    adj[order[i]] = running;
  }
  return adj;
}

TestScores score_subjects(const model::ModelParams& params,
                          const std::vector<prep::ModelInput>& subjects) {
  if (subjects.empty()) throw UsageError("score_subjects needs subjects");
  TestScores out;
  out.n_subjects = static_cast<int>(subjects.size());
  for (int s = 0; s < out.n_subjects; ++s) {
    const auto& subj = subjects[s];
    auto fwd = model::forward_subject(subj, params);
    for (int t = 0; t < subj.T; ++t) {
      const auto& step = fwd.steps[t];
      if (subj.labels.y_mask[t] && !std::isnan(step.risk)) {
        out.risk.push_back(step.risk);
        out.y.push_back(subj.labels.y[t] ? 1 : 0);
        out.risk_subject.push_back(s);
      }
      for (int c = 0; c < cohort::kCompositeCount; ++c) {
        if (!subj.labels.aux_mask[t][c] || std::isnan(step.aux[c])) continue;
        out.pred_z[c].push_back(prep::composite_from_unit(step.aux[c], c));
        out.target_z[c].push_back(subj.labels.aux_targets[t][c]);
        out.z_subject[c].push_back(s);
      }
    }
  }
  return out;
}

namespace {

// Per-subject positions into a pooled array, so a resample can gather the
// visits of every drawn subject (repeats included).
std::vector<std::vector<int>> positions_by_subject(const std::vector<int>& owner,
                                                   int n_subjects) {
  std::vector<std::vector<int>> by(n_subjects);
  for (int i = 0; i < static_cast<int>(owner.size()); ++i)
    by[owner[i]].push_back(i);
  return by;
}

MetricFn make_auroc_fn(const TestScores& ts,
                       const std::vector<std::vector<int>>& by_subj) {
  return [&ts, &by_subj](const std::vector<int>& idx) {
    std::vector<double> s;
    std::vector<int> l;
    for (int subj : idx)
      for (int i : by_subj[subj]) {
        s.push_back(ts.risk[i]);
        l.push_back(ts.y[i]);
      }
    return auroc(s, l);
  };
}

MetricFn make_auprc_fn(const TestScores& ts,
                       const std::vector<std::vector<int>>& by_subj) {
  return [&ts, &by_subj](const std::vector<int>& idx) {
    std::vector<double> s;
    std::vector<int> l;
    for (int subj : idx)
      for (int i : by_subj[subj]) {
        s.push_back(ts.risk[i]);
        l.push_back(ts.y[i]);
      }
    return auprc(s, l);
  };
}

MetricFn make_mse_fn(const TestScores& ts, int domain,
                     const std::vector<std::vector<int>>& by_subj) {
  return [&ts, domain, &by_subj](const std::vector<int>& idx) {
    double sum = 0.0;
    long long count = 0;
    for (int subj : idx)
      for (int i : by_subj[subj]) {
        double d = ts.pred_z[domain][i] - ts.target_z[domain][i];
        sum += d * d;
        ++count;
      }
    if (count == 0)
      throw NumericError("regression_mse undefined: empty resample");
    return sum / static_cast<double>(count);
  };
}

}  // namespace

EvalReport compare_models(const std::vector<const model::ModelParams*>& models,
                          const std::vector<std::string>& names,
                          int proposed_index,
                          const std::vector<prep::ModelInput>& test_subjects,
                          int B, double alpha, std::uint64_t seed,
                          int n_threads) {
  if (models.empty()) throw UsageError("compare_models needs models");
  if (names.size() != models.size())
    throw UsageError("one name per model required");
  if (proposed_index < 0 || proposed_index >= static_cast<int>(models.size()))
    throw UsageError("proposed model index out of range");
  if (test_subjects.empty()) throw UsageError("empty test split");
  check_draw_args(static_cast<int>(test_subjects.size()), B);
  if (!(alpha > 0.0 && alpha < 1.0))
    throw UsageError("alpha must lie in (0, 1)");

  const int n_models = static_cast<int>(models.size());
  const int n = static_cast<int>(test_subjects.size());

  std::vector<TestScores> ts;
  std::vector<double> point_auroc(n_models), point_auprc(n_models);
  ts.reserve(n_models);
  for (int i = 0; i < n_models; ++i) {
    ts.push_back(score_subjects(*models[i], test_subjects));
    if (ts.back().risk.empty())
      throw NumericError("model '" + names[i] +
                         "' produces no progression predictions");
    // evaluated up front so degenerate test labels surface as an undefined
    // metric rather than as failed resample draws
    point_auroc[i] = auroc(ts[i].risk, ts[i].y);
    point_auprc[i] = auprc(ts[i].risk, ts[i].y);
  }

  // label-side visit counts drive resample validity, so every model shares
  // one set of resample indices and per-resample metrics stay paired
  std::vector<long long> pos(n, 0), neg(n, 0);
  std::array<std::vector<long long>, 4> zc;
  zc.fill(std::vector<long long>(n, 0));
  for (int s = 0; s < n; ++s) {
    const auto& subj = test_subjects[s];
    for (int t = 0; t < subj.T; ++t) {
      if (subj.labels.y_mask[t]) (subj.labels.y[t] ? pos[s] : neg[s])++;
      for (int c = 0; c < 4; ++c)
        if (subj.labels.aux_mask[t][c]) zc[c][s]++;
    }
  }
  std::array<bool, 4> need_dom{};
  for (int c = 0; c < 4; ++c)
    for (const auto& t : ts)
      if (!t.pred_z[c].empty()) need_dom[c] = true;

  auto valid = [&](const std::vector<int>& idx) {
    long long p = 0, q = 0;
    std::array<long long, 4> z{};
    for (int s : idx) {
      p += pos[s];
      q += neg[s];
      for (int c = 0; c < 4; ++c) z[c] += zc[c][s];
    }
    if (p == 0 || q == 0) return false;
    for (int c = 0; c < 4; ++c)
      if (need_dom[c] && z[c] == 0) return false;
    return true;
  };
  auto resamples = draw_resamples(n, B, seed, valid);

  EvalReport report;
  report.proposed_index = proposed_index;
  report.seed = seed;
  report.B = B;
  report.alpha = alpha;
  report.n_test_subjects = n;
  report.n_test_visits = static_cast<int>(ts[proposed_index].risk.size());

  std::vector<std::vector<double>> auroc_vals(n_models), auprc_vals(n_models);
  for (int i = 0; i < n_models; ++i) {
    auto by_risk = positions_by_subject(ts[i].risk_subject, n);
    ModelReport row;
    row.name = names[i];
    row.proposed = (i == proposed_index);

    auto afn = make_auroc_fn(ts[i], by_risk);
    auto pfn = make_auprc_fn(ts[i], by_risk);
    auroc_vals[i] = metric_over_resamples(afn, resamples, n_threads);
    auprc_vals[i] = metric_over_resamples(pfn, resamples, n_threads);
    row.auroc = pivot_ci_from_values(point_auroc[i], auroc_vals[i], alpha);
    row.auprc = pivot_ci_from_values(point_auprc[i], auprc_vals[i], alpha);

    for (int c = 0; c < 4; ++c) {
      if (ts[i].pred_z[c].empty()) {
        row.mse[c] = {kNan, kNan, kNan};
        continue;
      }
      auto by_z = positions_by_subject(ts[i].z_subject[c], n);
      auto mfn = make_mse_fn(ts[i], c, by_z);
      std::vector<bool> all(ts[i].pred_z[c].size(), true);
      double point = regression_mse(ts[i].pred_z[c], ts[i].target_z[c], all);
      row.mse[c] = pivot_ci_from_values(point,
                                        metric_over_resamples(mfn, resamples,
                                                              n_threads),
                                        alpha);
    }
    row.p_auroc = row.p_auroc_adj = row.p_auprc = row.p_auprc_adj = kNan;
    report.models.push_back(std::move(row));
  }

  // paired tests: proposed versus each baseline on the shared resamples
  std::vector<int> baselines;
  std::vector<double> raw_a, raw_p;
  for (int i = 0; i < n_models; ++i) {
    if (i == proposed_index) continue;
    baselines.push_back(i);
    raw_a.push_back(
        wilcoxon_signed_rank(auroc_vals[proposed_index], auroc_vals[i]).p);
    raw_p.push_back(
        wilcoxon_signed_rank(auprc_vals[proposed_index], auprc_vals[i]).p);
  }
  auto adj_a = bh_adjust(raw_a);
  auto adj_p = bh_adjust(raw_p);
  for (std::size_t k = 0; k < baselines.size(); ++k) {
    auto& row = report.models[baselines[k]];
    row.p_auroc = raw_a[k];
    row.p_auroc_adj = adj_a[k];
    row.p_auprc = raw_p[k];
    row.p_auprc_adj = adj_p[k];
  }
  return report;
}

namespace {

nlohmann::json ci_json(const BootstrapCi& ci) {
  return {{"point", ci.point}, {"lower", ci.lower}, {"upper", ci.upper}};
}

void append_ci(std::string& line, const BootstrapCi& ci) {
  line += ',' + fmt(ci.point) + ',' + fmt(ci.lower) + ',' + fmt(ci.upper);
}

}  // namespace

void write_eval_report(const EvalReport& report, const std::string& dir) {
  std::ofstream csv(dir + "/metrics.csv");
  if (!csv) throw UsageError("cannot write " + dir + "/metrics.csv");
  csv << "model,proposed,auroc,auroc_lo,auroc_hi,auprc,auprc_lo,auprc_hi";
  for (auto name : cohort::kCompositeNames)
    csv << ",mse_" << name << ",mse_" << name << "_lo,mse_" << name << "_hi";
  csv << ",p_auroc,p_auroc_adj,p_auprc,p_auprc_adj,seed,B\n";
  for (const auto& row : report.models) {
    std::string line = row.name;
    line += row.proposed ? ",1" : ",0";
    append_ci(line, row.auroc);
    append_ci(line, row.auprc);
    for (const auto& m : row.mse) append_ci(line, m);
    line += ',' + fmt(row.p_auroc) + ',' + fmt(row.p_auroc_adj) + ',' +
            fmt(row.p_auprc) + ',' + fmt(row.p_auprc_adj);
    line += ',' + std::to_string(report.seed) + ',' + std::to_string(report.B);
    csv << line << '\n';
  }
  if (!csv.good()) throw UsageError("failed writing " + dir + "/metrics.csv");

  nlohmann::json j;
  j["seed"] = report.seed;
  j["B"] = report.B;
  j["alpha"] = report.alpha;
  j["proposed_index"] = report.proposed_index;
  j["n_test_subjects"] = report.n_test_subjects;
  j["n_test_visits"] = report.n_test_visits;
  j["models"] = nlohmann::json::array();
  for (const auto& row : report.models) {
    nlohmann::json m;
    m["name"] = row.name;
    m["proposed"] = row.proposed;
    m["auroc"] = ci_json(row.auroc);
    m["auprc"] = ci_json(row.auprc);
    for (int c = 0; c < 4; ++c)
      m["mse"][std::string(cohort::kCompositeNames[c])] = ci_json(row.mse[c]);
    m["p"] = {{"auroc", row.p_auroc},
              {"auroc_adjusted", row.p_auroc_adj},
              {"auprc", row.p_auprc},
              {"auprc_adjusted", row.p_auprc_adj}};
    j["models"].push_back(std::move(m));
  }
  std::ofstream js(dir + "/report.json");
  if (!js) throw UsageError("cannot write " + dir + "/report.json");
  js << j.dump(2) << '\n';
  if (!js.good()) throw UsageError("failed writing " + dir + "/report.json");
}

std::vector<AblationRow> run_ablation(
    const model::ModelConfig& base, const std::vector<prep::ModelInput>& train_set,
    const std::vector<prep::ModelInput>& val_set,
    const std::vector<prep::ModelInput>& test_set, const train::TrainConfig& tcfg,
    int B, double alpha, std::uint64_t bootstrap_seed) {
  // single modalities, then pairs, then the full set
  constexpr std::array<std::array<bool, 3>, 7> kSubsets = {{{true, false, false},
                                                            {false, true, false},
                                                            {false, false, true},
                                                            {true, true, false},
                                                            {true, false, true},
                                                            {false, true, true},
                                                            {true, true, true}}};
  std::vector<AblationRow> rows;
  rows.reserve(kSubsets.size());
  for (const auto& subset : kSubsets) {
    model::ModelConfig cfg = base;
    cfg.use_imaging = subset[0];
    cfg.use_cognition = subset[1];
    cfg.use_clinical = subset[2];
    auto trained = train::train_model(train_set, val_set, cfg, tcfg);

    std::string name;
    if (subset[0]) name = "imaging";
    if (subset[1]) name += (name.empty() ? "" : "+") + std::string("cognition");
    if (subset[2]) name += (name.empty() ? "" : "+") + std::string("clinical");

    auto report = compare_models({&trained.params}, {name}, 0, test_set, B,
                                 alpha, bootstrap_seed);
    AblationRow row;
    row.use_imaging = subset[0];
    row.use_cognition = subset[1];
    row.use_clinical = subset[2];
    row.report = std::move(report.models[0]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation(const std::vector<AblationRow>& rows,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << "modalities,imaging,cognition,clinical,auroc,auroc_lo,auroc_hi,"
         "auprc,auprc_lo,auprc_hi";
  for (auto name : cohort::kCompositeNames)
    out << ",mse_" << name << ",mse_" << name << "_lo,mse_" << name << "_hi";
  out << '\n';
  for (const auto& row : rows) {
    std::string line = row.report.name;
    line += row.use_imaging ? ",1" : ",0";
    line += row.use_cognition ? ",1" : ",0";
    line += row.use_clinical ? ",1" : ",0";
    append_ci(line, row.report.auroc);
    append_ci(line, row.report.auprc);
    for (const auto& m : row.report.mse) append_ci(line, m);
    out << line << '\n';
  }
  if (!out.good()) throw UsageError("failed writing " + path);
}

}  // namespace adrisk::eval
