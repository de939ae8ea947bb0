#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ubvm/error.hpp"
#include "ubvm/harness.hpp"

namespace ubvm {
namespace {

std::string quality_label(const SweepResult& r) {
  return r.outcome == Outcome::error ? r.error_kind : to_string(r.outcome);
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

}  // namespace

Report make_report(const SessionLog& log) {
  Report rep;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : log.samples) {
    ReportRow row;
    row.time_min = s.time_min;
    row.truth_ml = s.truth_ml;
    row.clinical_ml = s.clinical_ml;
    row.quality = quality_label(s.result);
    if (s.result.outcome == Outcome::ok) {
      row.estimate_ml = s.result.volume_ml;
      if (s.truth_ml > 0.0) {
        row.rel_error = std::abs(s.result.volume_ml - s.truth_ml) / s.truth_ml;
        rep.max_rel_error = std::max(rep.max_rel_error.value_or(0.0), *row.rel_error);
        sum += *row.rel_error;
        ++n;
      }
    }
    rep.rows.push_back(row);
  }
  if (n > 0) rep.mean_rel_error = sum / static_cast<double>(n);
  return rep;
}

void write_report_table(std::ostream& out, const Report& report, const std::string& title) {
  auto opt = [](const std::optional<double>& v, int prec) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << *v;
    return s.str();
  };
  out << "scenario: " << title << '\n';
  out << std::left << std::setw(10) << "time_min" << std::setw(12) << "truth_ml" << std::setw(14)
      << "estimate_ml" << std::setw(11) << "rel_err_%" << std::setw(13) << "clinical_ml"
      << "quality\n";
  for (const auto& r : report.rows) {
    out << std::left << std::setw(10) << opt(r.time_min, 1) << std::setw(12) << opt(r.truth_ml, 1)
        << std::setw(14) << opt(r.estimate_ml, 1) << std::setw(11)
        << opt(r.rel_error ? std::optional<double>(*r.rel_error * 100.0) : std::nullopt, 2)
        << std::setw(13) << opt(r.clinical_ml, 1) << r.quality << '\n';
  }
  out << "rows: " << report.rows.size() << '\n';
  out << "max_rel_error_%: "
      << opt(report.max_rel_error ? std::optional<double>(*report.max_rel_error * 100.0) : std::nullopt, 2)
      << '\n';
  out << "mean_rel_error_%: "
      << opt(report.mean_rel_error ? std::optional<double>(*report.mean_rel_error * 100.0) : std::nullopt, 2)
      << '\n';
}

Report report(const SessionLog& log, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Report rep = make_report(log);
  {
    auto out = open_out(out_dir / "report.txt");
    write_report_table(out, rep, log.scenario.name);
  }
  {
    auto out = open_out(out_dir / "estimates.txt");
    write_estimates_text(out, log.samples);
  }
  {
    auto out = open_out(out_dir / "volumes.txt");
    out << "# ubvm-volumes v1\n";
    out << "# time_min truth_ml estimate_ml rel_error clinical_ml\n";
    out << std::setprecision(10);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rep.rows) {
      out << r.time_min << ' ' << r.truth_ml << ' ' << r.estimate_ml.value_or(nan) << ' '
          << r.rel_error.value_or(nan) << ' ' << r.clinical_ml.value_or(nan) << '\n';
    }
  }
  return rep;
}

}  // namespace ubvm
