#include "imti/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "imti/common.hpp"
#include "imti/network.hpp"

namespace imti {

namespace {

void check_pair(const std::vector<double>& a, const std::vector<double>& b, const char* who) {
  if (a.size() != b.size())
    throw ValidationError(strf("%s: length mismatch %zu vs %zu", who, a.size(), b.size()));
  if (a.size() < 2) throw ValidationError(strf("%s: need at least 2 points, got %zu", who, a.size()));
  for (double x : a)
    if (!std::isfinite(x)) throw ValidationError(strf("%s: non-finite value", who));
  for (double x : b)
    if (!std::isfinite(x)) throw ValidationError(strf("%s: non-finite value", who));
}

}  // namespace

double pearson_lcc(const std::vector<double>& a, const std::vector<double>& b) {
  check_pair(a, b, "pearson_lcc");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw ValidationError("pearson_lcc: an input is constant, correlation undefined");
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });

  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman_srcc(const std::vector<double>& a, const std::vector<double>& b) {
  check_pair(a, b, "spearman_srcc");
  return pearson_lcc(average_ranks(a), average_ranks(b));
}

double mean_squared_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ValidationError(strf("mean_squared_error: length mismatch %zu vs %zu", a.size(), b.size()));
  if (a.empty()) throw ValidationError("mean_squared_error: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

EvalReport evaluate_report(const std::vector<ManifestEntry>& entries,
                           const std::map<std::string, std::array<double, 4>>& predictions,
                           std::vector<ScatterRow>* scatter) {
  if (entries.empty()) throw ValidationError("evaluate_report: no entries");

  std::array<std::vector<double>, 4> truth, pred;
  for (const ManifestEntry& e : entries) {
    auto it = predictions.find(e.id);
    if (it == predictions.end())
      throw ValidationError("evaluate_report: no prediction for id \"" + e.id + "\"");
    const TargetScores y = TargetScores::from_entry(e);
    for (std::size_t k = 0; k < 4; ++k) {
      truth[k].push_back(y[k]);
      pred[k].push_back(it->second[k]);
      if (scatter) scatter->push_back({e.id, target_names()[k], y[k], it->second[k]});
    }
  }

  EvalReport report;
  for (std::size_t k = 0; k < 4; ++k) {
    report.targets[k].lcc = pearson_lcc(pred[k], truth[k]);
    report.targets[k].srcc = spearman_srcc(pred[k], truth[k]);
    report.targets[k].mse = mean_squared_error(pred[k], truth[k]);
    report.targets[k].count = truth[k].size();
  }
  return report;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write report: " + path.string());
  out << "target,lcc,srcc,mse,count\n";
  for (std::size_t k = 0; k < 4; ++k) {
    const TargetReport& t = report.targets[k];
    out << target_names()[k] << ',' << format_double(t.lcc) << ',' << format_double(t.srcc) << ','
        << format_double(t.mse) << ',' << t.count << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path.string());
}

void write_scatter_csv(const std::filesystem::path& path, const std::vector<ScatterRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write scatter: " + path.string());
  out << "id,target,truth,prediction\n";
  for (const ScatterRow& r : rows)
    out << r.id << ',' << r.target << ',' << format_double(r.truth) << ','
        << format_double(r.prediction) << '\n';
  if (!out) throw ValidationError("write failed: " + path.string());
}

std::string format_report_table(const EvalReport& report) {
  std::string s = strf("%-16s %8s %8s %10s %6s\n", "target", "lcc", "srcc", "mse", "n");
  for (std::size_t k = 0; k < 4; ++k) {
    const TargetReport& t = report.targets[k];
    s += strf("%-16s %8.4f %8.4f %10.6f %6zu\n", target_names()[k].c_str(), t.lcc, t.srcc, t.mse, t.count);
  }
  return s;
}

}  // namespace imti
