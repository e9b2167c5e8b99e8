#pragma once

#include "martrace/spectral.hpp"

namespace martrace {

// Increasing exhaustion X_1 <= X_2 <= ... of a half-line window by prefix
// cutoffs T_j = j * window / stages.
struct Exhaustion {
  const MeasureSpace* space = nullptr;
  std::vector<double> cutoffs;                     // T_j, increasing
  std::vector<std::vector<Eigen::Index>> stages;  // atoms with midpoint < T_j
};

struct SigmaFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Exhaustion build_exhaustion(const MeasureSpace& space, int stages);

// 0/1 atom mask of the truncation projection P_j
Vector truncation_mask(const Exhaustion& ex, int stage);

// P_j K P_j: rows and columns outside X_j zeroed
OperatorMatrix truncate_operator(const OperatorMatrix& om, const Exhaustion& ex, int stage);

struct TruncatedTraceStage {
  int stage = 0;
  double cutoff = 0.0;
  double diag_integral = 0.0;  // integral of E_n(K)(x,x) over X_j
  double trace_eigsum = 0.0;   // eigenvalue sum of the truncated sandwiched operator
  double spectral_gap = 0.0;   // multiset distance of the Q-form and R-form spectra
};

struct TruncatedTraceReport {
  int level = 0;
  std::vector<TruncatedTraceStage> stages;
  bool monotone = false;        // diag integrals nondecreasing in j
  double max_trace_rel = 0.0;   // worst diag-vs-eigsum relative mismatch
  std::optional<double> tail_bound;  // analytic mass beyond the window, if known
};

TruncatedTraceReport truncated_averaged_trace(const Kernel& k, const Filtration& filt,
                                              int n, const Exhaustion& ex);

struct SpectrumEquivalenceReport {
  int stage = 0;
  double max_gap = 0.0;  // worst nonzero-eigenvalue mismatch between forms
  bool pass = false;
};

// compares the nonzero spectra of the X_j-restricted averaged-kernel matrix
// and of the full-size masked matrix
SpectrumEquivalenceReport spectrum_equivalence_check(const Kernel& k,
                                                     const Filtration& filt, int n,
                                                     const Exhaustion& ex, int stage,
                                                     double tol = 1e-9);

}  // namespace martrace
