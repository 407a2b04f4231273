#include "dbmi/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dbmi/error.hpp"

namespace dbmi {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::string report_header() {
  return "task_id\testimator\tmi_true\tmi_hat\tstd_error\tk\tm\tn_steps\t"
         "alpha\tseed\twall_seconds";
}

std::vector<ReportRow> read_report(const std::string& path) {
  std::ifstream in(path);
  std::vector<ReportRow> rows;
  if (!in) return rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == report_header()) continue;
    }
    const std::vector<std::string> f = split_tabs(line);
    if (f.size() != 11) {
      throw IoError("malformed report row in " + path + ": " + line);
    }
    ReportRow r;
    r.task_id = f[0];
    r.estimator = f[1];
    r.mi_true = std::stod(f[2]);
    r.mi_hat = std::stod(f[3]);
    r.std_error = std::stod(f[4]);
    r.outer = std::stoll(f[5]);
    r.inner = std::stoi(f[6]);
    r.n_steps = std::stoi(f[7]);
    r.alpha = std::stod(f[8]);
    r.seed = std::stoull(f[9]);
    r.wall_seconds = std::stod(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_report(const std::string& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open report for writing: " + path);
  }
  out << report_header() << '\n';
  for (const ReportRow& r : rows) {
    out << r.task_id << '\t' << r.estimator << '\t' << fmt_double(r.mi_true)
        << '\t' << fmt_double(r.mi_hat) << '\t' << fmt_double(r.std_error)
        << '\t' << r.outer << '\t' << r.inner << '\t' << r.n_steps << '\t'
        << fmt_double(r.alpha) << '\t' << r.seed << '\t'
        << fmt_double(r.wall_seconds) << '\n';
  }
  if (!out) {
    throw IoError("short write while saving report: " + path);
  }
}

void upsert_report_row(const std::string& path, const ReportRow& row) {
  std::vector<ReportRow> rows = read_report(path);
  bool replaced = false;
  for (ReportRow& r : rows) {
    if (r.task_id == row.task_id && r.estimator == row.estimator &&
        r.seed == row.seed) {
      r = row;
      replaced = true;
      break;
    }
  }
  if (!replaced) rows.push_back(row);
  write_report(path, rows);
}

}  // namespace dbmi
