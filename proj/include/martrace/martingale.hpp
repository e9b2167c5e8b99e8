#pragma once

#include "martrace/filtration.hpp"
#include "martrace/kernel.hpp"

namespace martrace {

// f in L^2(X, mu), constant on atoms; values live at atom midpoints.
struct GridFunction {
  const MeasureSpace* space = nullptr;
  Vector values;
};

GridFunction make_grid_function(const MeasureSpace& space, Vector values);

// weighted <f, g>_mu and ||f||_p; p = inf is encoded as p <= 0
double weighted_inner(const GridFunction& f, const GridFunction& g);
double weighted_norm(const GridFunction& f, double p);

// kernel samples at atom midpoints (dense, symmetric for the catalog)
Matrix sample_kernel_matrix(const Kernel& k, const MeasureSpace& space);

// E_n(K) as a cell x cell matrix; rows/columns of zero-measure cells are
// flagged undefined and stored as 0.
struct AveragedKernel {
  const Filtration* filtration = nullptr;
  int level = 0;
  Matrix values;                    // cells x cells
  std::vector<char> cell_defined;  // 0 for zero-measure cells
};

GridFunction conditional_expectation(const GridFunction& f, const Filtration& filt, int n);

GridFunction maximal_function(const GridFunction& f, const Filtration& filt);

AveragedKernel averaged_kernel(const Kernel& k, const Filtration& filt, int n);
AveragedKernel averaged_kernel(const Matrix& atom_samples, const Filtration& filt, int n);

// atom x atom expansion of E_n(K): constant on cell x cell blocks
Matrix expand_to_atoms(const AveragedKernel& ak);

// D_n as a dense atom x atom matrix: D[a][b] = chi(b in O_n(a)) / mu(O_n(a))
Matrix dn_operator_matrix(const Filtration& filt, int n);

struct SandwichReport {
  double max_abs_diff = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// checks the identity  D_n K D_n == E_n(K)  at atom resolution, computing
// both sides by independent routes
SandwichReport sandwich_identity_check(const Kernel& k, const Filtration& filt, int n,
                                       double tol);

}  // namespace martrace
