#include "rbmlab/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rbmlab/amp_rbm.hpp"
#include "rbmlab/baselines.hpp"
#include "rbmlab/errors.hpp"
#include "rbmlab/gd_dmft.hpp"
#include "rbmlab/state_evolution.hpp"

namespace rbm {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void matrix_header(std::ostringstream& os, const char* name, Index rows, Index cols) {
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) os << ',' << name << '_' << i + 1 << '_' << j + 1;
}

void matrix_row(std::ostringstream& os, const Mat& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) os << ',' << format_double(m(i, j));
}

}  // namespace

std::string overlap_trace_csv(const std::vector<Mat>& overlaps, const std::vector<double>& residual,
                              const std::vector<double>& objective) {
  std::ostringstream os;
  os << 't';
  const Index k = overlaps.empty() ? 0 : overlaps.front().rows();
  const Index r = overlaps.empty() ? 0 : overlaps.front().cols();
  matrix_header(os, "overlap", k, r);
  os << ",residual,objective\n";
  for (std::size_t t = 0; t < overlaps.size(); ++t) {
    require(overlaps[t].rows() == k && overlaps[t].cols() == r, "trace: overlap shape changed");
    os << t;
    matrix_row(os, overlaps[t]);
    os << ',';
    if (t < residual.size()) os << format_double(residual[t]);
    os << ',';
    if (t < objective.size()) os << format_double(objective[t]);
    os << '\n';
  }
  return os.str();
}

std::string amp_trace_csv(const AmpTrace& trace) {
  return overlap_trace_csv(trace.overlaps, trace.residual, trace.objective);
}

std::string gd_trace_csv(const GdTrace& trace) { return overlap_trace_csv(trace.overlaps, {}, trace.objective); }

std::string dmft_trace_csv(const DmftResult& result) { return overlap_trace_csv(result.overlaps, {}, {}); }

std::string cd_trace_csv(const CdResult& result) { return overlap_trace_csv(result.overlaps, {}, result.loss); }

std::string se_trace_csv(const SeTrace& trace) {
  std::ostringstream os;
  os << 't';
  if (!trace.states.empty()) {
    const SeState& s = trace.states.front();
    matrix_header(os, "M", s.M.rows(), s.M.cols());
    matrix_header(os, "Sigma", s.Sigma.rows(), s.Sigma.cols());
    matrix_header(os, "overlap", s.M.rows(), s.M.cols());
  }
  os << '\n';
  for (std::size_t t = 0; t < trace.states.size(); ++t) {
    os << t;
    matrix_row(os, trace.states[t].M);
    matrix_row(os, trace.states[t].Sigma);
    if (t < trace.overlaps.size()) matrix_row(os, trace.overlaps[t]);
    os << '\n';
  }
  return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("rename to " + path + " failed");
  }
}

}  // namespace rbm
