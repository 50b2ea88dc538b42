#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "adaoais/common.hpp"
#include "adaoais/oais.hpp"
#include "adaoais/proposals.hpp"

namespace adaoais {

/// Fixed 17-significant-digit rendering; reruns of the same computation
/// produce byte-identical text.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string zero_pad(int v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*d", width, v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

/// One run as CSV: iter, estimate, r_hat, grad_norm, the family's natural
/// parameters, status. Rows with iter % thin == 0 are kept, plus the final
/// record; only the final written row carries a status value. A run that
/// diverged before producing any record yields a header-only file.
template <ProposalFamily F>
void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace, const F& family,
                     int thin) {
  if (thin < 1) throw std::invalid_argument("write_trace_csv: thin must be at least 1");
  std::ofstream out = open_output(path);
  out << "iter,estimate,r_hat,grad_norm";
  for (const std::string& name : family.param_names()) out << ',' << name;
  out << ",status\n";
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const TraceRecord& r = trace.records[i];
    const bool last = (i + 1 == trace.records.size());
    if (r.iter % thin != 0 && !last) continue;
    out << r.iter << ',' << fmt_double(r.estimate) << ',' << fmt_double(r.r_hat) << ','
        << fmt_double(r.grad_norm);
    const Vec params = family.report_params(r.theta);
    for (Eigen::Index j = 0; j < params.size(); ++j) out << ',' << fmt_double(params[j]);
    out << ',' << (last ? (trace.completed() ? "completed" : "diverged") : "") << '\n';
  }
}

/// MSE curve as CSV: iter, mse, runs_used. Thinned like traces, final row
/// always kept.
inline void write_mse_csv(const std::filesystem::path& path, const MseCurve& curve, int thin) {
  if (thin < 1) throw std::invalid_argument("write_mse_csv: thin must be at least 1");
  std::ofstream out = open_output(path);
  out << "iter,mse,runs_used\n";
  const std::size_t n = curve.mse.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (k % static_cast<std::size_t>(thin) != 0 && k + 1 != n) continue;
    out << k << ',' << fmt_double(curve.mse[k]) << ',' << curve.runs_used << '\n';
  }
}

/// Per-run entry for a summary document.
template <ProposalFamily F>
nlohmann::json run_detail_json(int index, const RunTrace& trace, const F& family,
                               double wall_time_s) {
  nlohmann::json j;
  j["index"] = index;
  j["seed"] = trace.seed;
  j["status"] = trace.completed() ? "completed" : "diverged";
  if (!trace.completed()) j["diverged_at"] = trace.diverged_at;
  j["wall_time_s"] = wall_time_s;
  if (!trace.records.empty()) {
    const TraceRecord& last = trace.records.back();
    j["final_iter"] = last.iter;
    j["final_estimate"] = last.estimate;
    j["final_r_hat"] = last.r_hat;
    j["weight_overflow"] = last.weight_overflow;
    nlohmann::json params;
    const Vec values = family.report_params(last.theta);
    const std::vector<std::string> names = family.param_names();
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = values[static_cast<Eigen::Index>(i)];
    j["final_params"] = params;
  }
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace adaoais
