#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dbmi {

// One line of the tab-separated estimation report. Every field needed to
// re-run the row is present; doubles are printed with full round-trip
// precision.
struct ReportRow {
  std::string task_id;
  std::string estimator;
  double mi_true = 0.0;
  double mi_hat = 0.0;
  double std_error = 0.0;
  std::int64_t outer = 0;  // K
  std::int32_t inner = 0;  // M
  std::int32_t n_steps = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

std::string report_header();

// Missing file reads as empty.
std::vector<ReportRow> read_report(const std::string& path);

// Replaces the row with the same (task_id, estimator, seed), appends
// otherwise, and rewrites the file; duplicate invocations are idempotent.
void upsert_report_row(const std::string& path, const ReportRow& row);

void write_report(const std::string& path, const std::vector<ReportRow>& rows);

}  // namespace dbmi
