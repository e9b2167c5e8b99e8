#include "martrace/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

namespace martrace {

OperatorMatrix assemble(Matrix samples, const MeasureSpace& space) {
  if (space.atom_count() > 4096)
    throw SpectralError("dense assembly capped at 4096 atoms");
  if (samples.rows() != space.atom_count() || samples.cols() != space.atom_count())
    throw SpectralError("sample matrix size does not match the space");
  OperatorMatrix om;
  om.space = &space;
  om.weights = space.weights();
  const Vector sq = om.weights.cwiseSqrt();
  om.symmetrized = sq.asDiagonal() * samples * sq.asDiagonal();
  om.samples = std::move(samples);
  return om;
}

OperatorMatrix assemble(const Kernel& k, const MeasureSpace& space) {
  if (space.atom_count() > 4096)
    throw SpectralError("dense assembly capped at 4096 atoms");
  return assemble(sample_kernel_matrix(k, space), space);
}

namespace {

// Implicit-shift QL on a symmetric tridiagonal matrix (diag d, subdiag e).
// Eigen's solver caps iterations low enough to give up on large matrices
// with tightly clustered eigenvalue pairs; this fallback allows more.
bool tridiagonal_ql(Vector& d, Vector& e, Matrix* z, int max_iter = 100) {
  const Eigen::Index n = d.size();
  if (n == 0) return true;
  e.conservativeResize(n);
  e[n - 1] = 0.0;

  for (Eigen::Index l = 0; l < n; ++l) {
    int iter = 0;
    Eigen::Index m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == max_iter) return false;
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        Eigen::Index i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (z)
            for (Eigen::Index k = 0; k < n; ++k) {
              f = (*z)(k, i + 1);
              (*z)(k, i + 1) = s * (*z)(k, i) + c * f;
              (*z)(k, i) = c * (*z)(k, i) - s * f;
            }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  return true;
}

// fallback path shared by both decomposition entry points
bool fallback_eigensolve(const Matrix& s, Vector& vals, Matrix* vecs) {
  Eigen::Tridiagonalization<Matrix> tri(s);
  Vector d = tri.diagonal();
  Vector e = tri.subDiagonal();
  Matrix q;
  if (vecs) q = tri.matrixQ();
  if (!tridiagonal_ql(d, e, vecs ? &q : nullptr)) return false;
  vals = std::move(d);
  if (vecs) *vecs = std::move(q);
  return true;
}

void sort_descending(Vector& vals, Matrix* vecs) {
  const Eigen::Index n = vals.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return vals[a] > vals[b]; });
  Vector sv(n);
  Matrix svec;
  if (vecs) svec.resize(vecs->rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sv[i] = vals[order[static_cast<std::size_t>(i)]];
    if (vecs) svec.col(i) = vecs->col(order[static_cast<std::size_t>(i)]);
  }
  vals = std::move(sv);
  if (vecs) *vecs = std::move(svec);
}

}  // namespace

SpectralDecomposition eigendecompose(const Matrix& s) {
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if (asym > 1e-10 * scale) throw SpectralError("matrix is not symmetric");

  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);

  SpectralDecomposition d;
  if (es.info() == Eigen::Success) {
    d.eigenvalues = es.eigenvalues();
    d.eigenvectors = es.eigenvectors();
  } else if (!fallback_eigensolve(sym, d.eigenvalues, &d.eigenvectors)) {
    throw SpectralError("eigendecomposition failed");
  }
  sort_descending(d.eigenvalues, &d.eigenvectors);

  // sign convention: first nonzero component of each eigenvector positive
  for (Eigen::Index j = 0; j < d.eigenvectors.cols(); ++j)
    for (Eigen::Index i = 0; i < d.eigenvectors.rows(); ++i) {
      if (std::abs(d.eigenvectors(i, j)) > 1e-14) {
        if (d.eigenvectors(i, j) < 0.0) d.eigenvectors.col(j) = -d.eigenvectors.col(j);
        break;
      }
    }

  d.singular_values = d.eigenvalues.cwiseAbs();
  std::sort(d.singular_values.begin(), d.singular_values.end(), std::greater<>());

  d.residual = (s - d.eigenvectors * d.eigenvalues.asDiagonal() * d.eigenvectors.transpose())
                   .cwiseAbs()
                   .maxCoeff();
  return d;
}

Vector symmetric_eigenvalues(const Matrix& s) {
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  Vector v;
  if (es.info() == Eigen::Success) v = es.eigenvalues();
  else if (!fallback_eigensolve(sym, v, nullptr))
    throw SpectralError("eigendecomposition failed");
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

Matrix averaged_cell_operator(const AveragedKernel& ak) {
  const auto& part = ak.filtration->levels[static_cast<std::size_t>(ak.level)];
  const auto n_cells = static_cast<Eigen::Index>(part.cells.size());
  Vector sq(n_cells);
  for (Eigen::Index u = 0; u < n_cells; ++u)
    sq[u] = std::sqrt(std::max(0.0, part.cells[static_cast<std::size_t>(u)].measure));
  return sq.asDiagonal() * ak.values * sq.asDiagonal();
}

double operator_norm(const Matrix& sym) {
  const Vector v = symmetric_eigenvalues(sym);
  return std::max(std::abs(v[0]), std::abs(v[v.size() - 1]));
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::TraceClassEvidence: return "trace_class_evidence";
    case Verdict::DivergenceEvidence: return "divergence_evidence";
    default: return "inconclusive";
  }
}

Verdict classify_trace_sequence(const std::vector<double>& t) {
  if (t.size() < 4) return Verdict::Inconclusive;
  std::vector<double> d(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) d[i - 1] = t[i] - t[i - 1];
  const std::size_t m = d.size();
  const double d0 = d[m - 3], d1 = d[m - 2], d2 = d[m - 1];

  const bool shrinking = std::abs(d0) >= 1.5 * std::abs(d1) &&
                         std::abs(d1) >= 1.5 * std::abs(d2);
  const bool settled = std::abs(d2) <= 1e-3 * std::max(1.0, std::abs(t.back()));
  if (shrinking && settled) return Verdict::TraceClassEvidence;

  const double delta = 0.05 * t.front();
  if (delta > 0.0 && d0 >= delta && d1 >= delta && d2 >= delta)
    return Verdict::DivergenceEvidence;
  return Verdict::Inconclusive;
}

TraceReport trace_study(const Kernel& k, const Filtration& filt, int n_min, int n_max,
                        int top_k) {
  if (n_max > filt.depth()) throw SpectralError("n_max exceeds the filtration depth");
  if (n_min < 0 || n_min > n_max) throw SpectralError("bad level range");

  const Matrix samples = sample_kernel_matrix(k, *filt.space);

  TraceReport rep;
  std::vector<Vector> spectra;
  for (int n = n_min; n <= n_max; ++n) {
    const AveragedKernel ak = averaged_kernel(samples, filt, n);
    const auto& part = filt.levels[static_cast<std::size_t>(n)];

    TraceLevel lvl;
    lvl.n = n;
    for (std::size_t u = 0; u < part.cells.size(); ++u)
      if (part.cells[u].measure > 0.0)
        lvl.t_n += part.cells[u].measure *
                   ak.values(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u));

    const Vector eig = symmetric_eigenvalues(averaged_cell_operator(ak));
    lvl.tr_sandwich = eig.sum();
    const Eigen::Index kk = std::min<Eigen::Index>(top_k, eig.size());
    lvl.top_eigenvalues = eig.head(kk);
    spectra.push_back(eig);

    const double rel = std::abs(lvl.t_n - lvl.tr_sandwich) /
                       std::max(1.0, std::abs(lvl.t_n));
    rep.diag_vs_sandwich_max_rel = std::max(rep.diag_vs_sandwich_max_rel, rel);
    rep.levels.push_back(std::move(lvl));
  }

  // eigenvalue gaps against the finest studied level
  const Vector& finest = spectra.back();
  for (auto& lvl : rep.levels) {
    const Eigen::Index kk = lvl.top_eigenvalues.size();
    lvl.eigenvalue_gaps = Vector::Zero(kk);
    for (Eigen::Index j = 0; j < kk; ++j) {
      const double fj = j < finest.size() ? finest[j] : 0.0;
      lvl.eigenvalue_gaps[j] = std::abs(lvl.top_eigenvalues[j] - fj);
    }
  }

  std::vector<double> t;
  for (const auto& lvl : rep.levels) t.push_back(lvl.t_n);
  for (std::size_t i = 1; i < t.size(); ++i) rep.increments.push_back(t[i] - t[i - 1]);
  const std::size_t m = rep.increments.size();
  if (m >= 3)
    rep.growth_slope =
        (rep.increments[m - 1] + rep.increments[m - 2] + rep.increments[m - 3]) / 3.0;

  rep.trace_estimate = t.back();
  rep.tail_correction = truncation_tail(k);
  rep.corrected_estimate = rep.trace_estimate + rep.tail_correction.value_or(0.0);
  rep.verdict = classify_trace_sequence(t);
  return rep;
}

UpperBoundReport upper_bound_check(const Kernel& k, const Filtration& filt, int n_min,
                                   int n_max, std::optional<double> trace_truth) {
  if (!trace_truth) {
    const auto truth = spectrum_truth(k);
    if (!truth || truth->divergent_trace)
      throw SpectralError("upper_bound_check needs an analytic trace");
    trace_truth = truth->trace;
  }
  const Matrix samples = sample_kernel_matrix(k, *filt.space);

  UpperBoundReport rep;
  rep.trace_truth = *trace_truth;
  rep.pass = true;
  for (int n = n_min; n <= n_max; ++n) {
    const AveragedKernel ak = averaged_kernel(samples, filt, n);
    const Vector eig = symmetric_eigenvalues(averaged_cell_operator(ak));
    UpperBoundLevel lvl;
    lvl.n = n;
    lvl.trace = eig.sum();
    lvl.slack = rep.trace_truth - lvl.trace;
    if (lvl.trace > rep.trace_truth + 1e-8) rep.pass = false;
    rep.levels.push_back(lvl);
  }
  return rep;
}

SingularValueReport singular_value_convergence(const Kernel& k, const Filtration& filt,
                                               int j_max, int n_min) {
  if (j_max < 1 || j_max > 16) throw SpectralError("j_max must be in [1, 16]");
  const MeasureSpace& space = *filt.space;
  const OperatorMatrix finest = assemble(sample_kernel_matrix(k, space), space);
  const Vector finest_eig = symmetric_eigenvalues(finest.symmetrized);

  auto top_singular = [&](const Vector& eig) {
    Vector s = eig.cwiseAbs();
    std::sort(s.begin(), s.end(), std::greater<>());
    Vector out = Vector::Zero(j_max);
    // zero-pad: the operator has at least rank-deficiency zeros below cell count
    out.head(std::min<Eigen::Index>(j_max, s.size())) =
        s.head(std::min<Eigen::Index>(j_max, s.size()));
    return out;
  };
  const Vector s_finest = top_singular(finest_eig);

  const Vector sq = finest.weights.cwiseSqrt();
  SingularValueReport rep;
  rep.s_finest = s_finest;
  rep.final_gap_ok = true;
  rep.weyl_all_ok = true;

  std::vector<double> s1_gaps;
  for (int n = n_min; n <= filt.depth(); ++n) {
    const AveragedKernel ak = averaged_kernel(finest.samples, filt, n);
    const Vector eig = symmetric_eigenvalues(averaged_cell_operator(ak));

    SingularValueLevel lvl;
    lvl.n = n;
    lvl.s = top_singular(eig);
    lvl.gap = (lvl.s - s_finest).cwiseAbs();

    const Matrix diff =
        sq.asDiagonal() * (expand_to_atoms(ak) - finest.samples) * sq.asDiagonal();
    lvl.op_norm_diff = operator_norm(diff);
    lvl.weyl_ok = (lvl.gap.array() <= lvl.op_norm_diff + 1e-10).all();
    if (!lvl.weyl_ok) rep.weyl_all_ok = false;

    s1_gaps.push_back(lvl.gap[0]);
    if (n == filt.depth() && lvl.gap.maxCoeff() > 1e-10) rep.final_gap_ok = false;
    rep.levels.push_back(std::move(lvl));
  }

  rep.monotone_trend = true;
  for (std::size_t i = 1; i < s1_gaps.size(); ++i)
    if (s1_gaps[i] > s1_gaps[i - 1] + 1e-12) rep.monotone_trend = false;
  return rep;
}

}  // namespace martrace
