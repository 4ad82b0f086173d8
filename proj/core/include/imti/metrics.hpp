#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "imti/manifest.hpp"

namespace imti {

// Pearson correlation, two-pass. A constant input has no defined
// correlation and is rejected.
double pearson_lcc(const std::vector<double>& a, const std::vector<double>& b);

// Spearman rank correlation: Pearson over average ranks, so ties are shared.
double spearman_srcc(const std::vector<double>& a, const std::vector<double>& b);

double mean_squared_error(const std::vector<double>& a, const std::vector<double>& b);

// 1-based average ranks (tied values share the mean of their positions).
std::vector<double> average_ranks(const std::vector<double>& v);

struct TargetReport {
  double lcc = 0.0, srcc = 0.0, mse = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  std::array<TargetReport, 4> targets;  // model target order
};

struct ScatterRow {
  std::string id;
  std::string target;
  double truth = 0.0;
  double prediction = 0.0;
};

// Per-target metrics over utterance-level predictions keyed by manifest id.
// Every entry must have a prediction. Optionally collects scatter rows in
// entry order.
EvalReport evaluate_report(const std::vector<ManifestEntry>& entries,
                           const std::map<std::string, std::array<double, 4>>& predictions,
                           std::vector<ScatterRow>* scatter = nullptr);

void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
void write_scatter_csv(const std::filesystem::path& path, const std::vector<ScatterRow>& rows);
std::string format_report_table(const EvalReport& report);

}  // namespace imti
