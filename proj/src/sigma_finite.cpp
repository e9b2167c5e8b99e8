#include "martrace/sigma_finite.hpp"

#include <algorithm>
#include <cmath>

namespace martrace {

Exhaustion build_exhaustion(const MeasureSpace& space, int stages) {
  if (!std::holds_alternative<HalfLine>(space.kind))
    throw SigmaFiniteError("exhaustions are defined on half-line spaces");
  if (stages < 1) throw SigmaFiniteError("need at least one stage");

  Exhaustion ex;
  ex.space = &space;
  const double window = *space.window;
  for (int j = 1; j <= stages; ++j) {
    const double cutoff = window * static_cast<double>(j) / stages;
    std::vector<Eigen::Index> atoms;
    for (const auto& a : space.atoms)
      if (a.rep.x < cutoff) atoms.push_back(a.index);
    ex.cutoffs.push_back(cutoff);
    ex.stages.push_back(std::move(atoms));
  }
  return ex;
}

Vector truncation_mask(const Exhaustion& ex, int stage) {
  if (stage < 0 || stage >= static_cast<int>(ex.stages.size()))
    throw SigmaFiniteError("stage out of range");
  Vector m = Vector::Zero(ex.space->atom_count());
  for (auto a : ex.stages[static_cast<std::size_t>(stage)]) m[a] = 1.0;
  return m;
}

OperatorMatrix truncate_operator(const OperatorMatrix& om, const Exhaustion& ex,
                                 int stage) {
  const Vector m = truncation_mask(ex, stage);
  OperatorMatrix out;
  out.space = om.space;
  out.weights = om.weights;
  out.samples = m.asDiagonal() * om.samples * m.asDiagonal();
  out.symmetrized = m.asDiagonal() * om.symmetrized * m.asDiagonal();
  return out;
}

namespace {

Matrix atom_level_symmetrized(const AveragedKernel& ak) {
  const Vector sq = ak.filtration->space->weights().cwiseSqrt();
  return sq.asDiagonal() * expand_to_atoms(ak) * sq.asDiagonal();
}

double nonzero_spectrum_gap(const Matrix& full_masked, const Matrix& restricted) {
  const Vector r = symmetric_eigenvalues(full_masked);
  const Vector q = symmetric_eigenvalues(restricted);
  // the masked matrix is the restriction padded with structural zeros
  std::vector<double> expected(q.begin(), q.end());
  expected.resize(static_cast<std::size_t>(r.size()), 0.0);
  std::sort(expected.begin(), expected.end(), std::greater<>());
  double gap = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    gap = std::max(gap, std::abs(r[i] - expected[static_cast<std::size_t>(i)]));
  return gap;
}

}  // namespace

TruncatedTraceReport truncated_averaged_trace(const Kernel& k, const Filtration& filt,
                                              int n, const Exhaustion& ex) {
  const MeasureSpace& space = *filt.space;
  const AveragedKernel ak = averaged_kernel(k, filt, n);
  const auto& part = filt.levels[static_cast<std::size_t>(n)];
  const Matrix sym = atom_level_symmetrized(ak);

  TruncatedTraceReport rep;
  rep.level = n;
  rep.monotone = true;

  double prev = 0.0;
  for (int j = 0; j < static_cast<int>(ex.stages.size()); ++j) {
    TruncatedTraceStage st;
    st.stage = j;
    st.cutoff = ex.cutoffs[static_cast<std::size_t>(j)];

    for (auto a : ex.stages[static_cast<std::size_t>(j)]) {
      const Eigen::Index u = part.atom_to_cell[static_cast<std::size_t>(a)];
      if (part.cells[static_cast<std::size_t>(u)].measure > 0.0)
        st.diag_integral += space.atoms[static_cast<std::size_t>(a)].measure *
                            ak.values(u, u);
    }

    const Vector m = truncation_mask(ex, j);
    const Matrix masked = m.asDiagonal() * sym * m.asDiagonal();
    st.trace_eigsum = symmetric_eigenvalues(masked).sum();

    // restriction to the stage atoms for the spectral comparison
    const auto& idx = ex.stages[static_cast<std::size_t>(j)];
    Matrix restricted(idx.size(), idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < idx.size(); ++c)
        restricted(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            sym(idx[r], idx[c]);
    st.spectral_gap = idx.empty() ? 0.0 : nonzero_spectrum_gap(masked, restricted);

    const double rel = std::abs(st.diag_integral - st.trace_eigsum) /
                       std::max(1.0, std::abs(st.diag_integral));
    rep.max_trace_rel = std::max(rep.max_trace_rel, rel);
    if (st.diag_integral < prev - 1e-12) rep.monotone = false;
    prev = st.diag_integral;
    rep.stages.push_back(st);
  }

  if (std::holds_alternative<RankOneExp>(k.family))
    rep.tail_bound = 0.5 * std::exp(-2.0 * *space.window);
  return rep;
}

SpectrumEquivalenceReport spectrum_equivalence_check(const Kernel& k,
                                                     const Filtration& filt, int n,
                                                     const Exhaustion& ex, int stage,
                                                     double tol) {
  const AveragedKernel ak = averaged_kernel(k, filt, n);
  const Matrix sym = atom_level_symmetrized(ak);
  const Vector m = truncation_mask(ex, stage);
  const Matrix masked = m.asDiagonal() * sym * m.asDiagonal();

  const auto& idx = ex.stages[static_cast<std::size_t>(stage)];
  SpectrumEquivalenceReport rep;
  rep.stage = stage;
  if (idx.empty()) {
    rep.max_gap = masked.cwiseAbs().maxCoeff();
    rep.pass = rep.max_gap <= tol;
    return rep;
  }
  Matrix restricted(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c)
      restricted(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          sym(idx[r], idx[c]);
  rep.max_gap = nonzero_spectrum_gap(masked, restricted);
  rep.pass = rep.max_gap <= tol;
  return rep;
}

}  // namespace martrace
