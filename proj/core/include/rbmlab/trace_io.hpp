// CSV traces shared by AMP, GD, CD, DMFT and SE, plus atomic file writes.
#pragma once

#include <string>
#include <vector>

#include "rbmlab/types.hpp"

namespace rbm {

struct AmpTrace;
struct GdTrace;
struct CdResult;
struct DmftResult;
struct SeTrace;

// Shortest round-trip representation, so identical runs give identical bytes.
std::string format_double(double v);

// Columns t, overlap_i_j (i <= k, j <= r, 1-based), residual, objective.
// Missing series are left empty.
std::string overlap_trace_csv(const std::vector<Mat>& overlaps, const std::vector<double>& residual,
                              const std::vector<double>& objective);

std::string amp_trace_csv(const AmpTrace& trace);
std::string gd_trace_csv(const GdTrace& trace);
std::string dmft_trace_csv(const DmftResult& result);
// Objective column carries the CD reconstruction loss.
std::string cd_trace_csv(const CdResult& result);
// Columns t, M_i_j, Sigma_i_j, overlap_i_j.
std::string se_trace_csv(const SeTrace& trace);

// Writes to path.tmp then renames over path.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace rbm
