#pragma once

#include "martrace/martingale.hpp"

namespace martrace {

// Measure-weighted discretization of the integral operator of a kernel:
// raw midpoint samples K and the symmetrized form S = W^1/2 K W^1/2, whose
// spectrum equals that of f -> sum_b K(.,b) f(b) w(b).
struct OperatorMatrix {
  const MeasureSpace* space = nullptr;
  Matrix samples;      // atom x atom kernel values
  Vector weights;      // atom measures
  Matrix symmetrized;  // sqrt(w) K sqrt(w)
};

struct SpectralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

OperatorMatrix assemble(const Kernel& k, const MeasureSpace& space);
OperatorMatrix assemble(Matrix samples, const MeasureSpace& space);

struct SpectralDecomposition {
  Vector eigenvalues;      // decreasing
  Vector singular_values;  // |eigenvalues|, decreasing
  Matrix eigenvectors;     // columns, matching eigenvalues
  double residual = 0.0;   // ||S - Q L Q^T||_max
};

SpectralDecomposition eigendecompose(const Matrix& s);

// eigenvalues only, decreasing
Vector symmetric_eigenvalues(const Matrix& s);

// symmetrized cell-level matrix of the averaged-kernel operator; its
// spectrum is the nonzero spectrum of the atom-level E_n(K) operator
Matrix averaged_cell_operator(const AveragedKernel& ak);

// max |eigenvalue| of the symmetrized difference: the operator 2->2 norm
double operator_norm(const Matrix& sym);

enum class Verdict { TraceClassEvidence, DivergenceEvidence, Inconclusive };

const char* verdict_name(Verdict v);

struct TraceLevel {
  int n = 0;
  double t_n = 0.0;          // sum_u mu(u) E_n(K)(u,u)
  double tr_sandwich = 0.0;  // eigenvalue sum of the sandwiched operator
  Vector top_eigenvalues;
  Vector eigenvalue_gaps;  // |lambda_j(n) - lambda_j(n_max)|
};

struct TraceReport {
  std::vector<TraceLevel> levels;
  double trace_estimate = 0.0;            // t at n_max
  std::optional<double> tail_correction;  // analytic truncation tail, if any
  double corrected_estimate = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  double diag_vs_sandwich_max_rel = 0.0;  // agreement of the two trace routes
  std::vector<double> increments;         // t_n - t_{n-1}
  double growth_slope = 0.0;              // mean increment over the last 3 levels
};

TraceReport trace_study(const Kernel& k, const Filtration& filt, int n_min, int n_max,
                        int top_k);

// verdict rule on a diagonal-average sequence (exposed for testing)
Verdict classify_trace_sequence(const std::vector<double>& t);

struct UpperBoundLevel {
  int n = 0;
  double trace = 0.0;
  double slack = 0.0;  // trace_truth - trace
};

struct UpperBoundReport {
  double trace_truth = 0.0;
  std::vector<UpperBoundLevel> levels;
  bool pass = false;
};

UpperBoundReport upper_bound_check(const Kernel& k, const Filtration& filt, int n_min,
                                   int n_max,
                                   std::optional<double> trace_truth = std::nullopt);

struct SingularValueLevel {
  int n = 0;
  Vector s;             // s_j(E_n) for j <= j_max
  Vector gap;           // |s_j(E_n) - s_j(K_L)|
  double op_norm_diff;  // ||E_n - K_L||_{2->2}
  bool weyl_ok = false;
};

struct SingularValueReport {
  Vector s_finest;  // s_j(K_L)
  std::vector<SingularValueLevel> levels;
  bool final_gap_ok = false;  // gap at n = depth <= 1e-10
  bool monotone_trend = false;
  bool weyl_all_ok = false;
};

SingularValueReport singular_value_convergence(const Kernel& k, const Filtration& filt,
                                               int j_max, int n_min = 1);

}  // namespace martrace
