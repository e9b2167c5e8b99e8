#include "martrace/martingale.hpp"

#include <cmath>

namespace martrace {

GridFunction make_grid_function(const MeasureSpace& space, Vector values) {
  if (values.size() != space.atom_count())
    throw std::invalid_argument("grid function length must equal the atom count");
  return GridFunction{&space, std::move(values)};
}

double weighted_inner(const GridFunction& f, const GridFunction& g) {
  double s = 0.0;
  for (Eigen::Index a = 0; a < f.values.size(); ++a)
    s += f.space->atoms[static_cast<std::size_t>(a)].measure * f.values[a] * g.values[a];
  return s;
}

double weighted_norm(const GridFunction& f, double p) {
  if (p <= 0.0) {  // L^inf over atoms of positive measure
    double m = 0.0;
    for (Eigen::Index a = 0; a < f.values.size(); ++a)
      if (f.space->atoms[static_cast<std::size_t>(a)].measure > 0.0)
        m = std::max(m, std::abs(f.values[a]));
    return m;
  }
  double s = 0.0;
  for (Eigen::Index a = 0; a < f.values.size(); ++a)
    s += f.space->atoms[static_cast<std::size_t>(a)].measure *
         std::pow(std::abs(f.values[a]), p);
  return std::pow(s, 1.0 / p);
}

Matrix sample_kernel_matrix(const Kernel& k, const MeasureSpace& space) {
  if (const auto* g = std::get_if<SampledGrid>(&k.family)) {
    if (g->values.rows() != space.atom_count())
      throw KernelError("sampled grid size does not match the space");
    return g->values;
  }
  const Eigen::Index n = space.atom_count();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = eval(k, space, space.atoms[static_cast<std::size_t>(i)].rep,
                     space.atoms[static_cast<std::size_t>(i)].rep);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = eval(k, space, space.atoms[static_cast<std::size_t>(i)].rep,
                            space.atoms[static_cast<std::size_t>(j)].rep);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

GridFunction conditional_expectation(const GridFunction& f, const Filtration& filt, int n) {
  if (n < 0 || n > filt.depth()) throw FiltrationError("level out of range");
  const auto& part = filt.levels[static_cast<std::size_t>(n)];
  Vector out = Vector::Zero(f.values.size());
  for (const auto& cell : part.cells) {
    if (cell.measure <= 0.0) continue;  // atoms in null cells stay 0
    double s = 0.0;
    for (auto a : cell.atom_indices)
      s += f.space->atoms[static_cast<std::size_t>(a)].measure * f.values[a];
    const double mean = s / cell.measure;
    for (auto a : cell.atom_indices) out[a] = mean;
  }
  return GridFunction{f.space, std::move(out)};
}

GridFunction maximal_function(const GridFunction& f, const Filtration& filt) {
  Vector sup = Vector::Zero(f.values.size());
  for (int n = 1; n <= filt.depth(); ++n) {
    const GridFunction en = conditional_expectation(f, filt, n);
    sup = sup.cwiseMax(en.values.cwiseAbs());
  }
  return GridFunction{f.space, std::move(sup)};
}

AveragedKernel averaged_kernel(const Matrix& atom_samples, const Filtration& filt, int n) {
  if (n < 0 || n > filt.depth()) throw FiltrationError("level out of range");
  const MeasureSpace& space = *filt.space;
  const auto& part = filt.levels[static_cast<std::size_t>(n)];
  const auto n_cells = static_cast<Eigen::Index>(part.cells.size());
  const Eigen::Index n_atoms = space.atom_count();

  // column-condense: T(a, v) = sum_{b in v} K(a, b) w_b
  Matrix t = Matrix::Zero(n_atoms, n_cells);
  for (Eigen::Index v = 0; v < n_cells; ++v) {
    const auto& cv = part.cells[static_cast<std::size_t>(v)];
    for (auto b : cv.atom_indices)
      t.col(v) += space.atoms[static_cast<std::size_t>(b)].measure * atom_samples.col(b);
  }

  AveragedKernel ak;
  ak.filtration = &filt;
  ak.level = n;
  ak.values = Matrix::Zero(n_cells, n_cells);
  ak.cell_defined.assign(static_cast<std::size_t>(n_cells), 1);
  for (Eigen::Index u = 0; u < n_cells; ++u) {
    const auto& cu = part.cells[static_cast<std::size_t>(u)];
    if (cu.measure <= 0.0) {
      ak.cell_defined[static_cast<std::size_t>(u)] = 0;
      continue;
    }
    for (Eigen::Index v = 0; v < n_cells; ++v) {
      const auto& cv = part.cells[static_cast<std::size_t>(v)];
      if (cv.measure <= 0.0) {
        ak.cell_defined[static_cast<std::size_t>(v)] = 0;
        continue;
      }
      double s = 0.0;
      for (auto a : cu.atom_indices)
        s += space.atoms[static_cast<std::size_t>(a)].measure * t(a, v);
      ak.values(u, v) = s / (cu.measure * cv.measure);
    }
  }
  return ak;
}

AveragedKernel averaged_kernel(const Kernel& k, const Filtration& filt, int n) {
  return averaged_kernel(sample_kernel_matrix(k, *filt.space), filt, n);
}

Matrix expand_to_atoms(const AveragedKernel& ak) {
  const Filtration& filt = *ak.filtration;
  const auto& part = filt.levels[static_cast<std::size_t>(ak.level)];
  const Eigen::Index n_atoms = filt.space->atom_count();
  Matrix out = Matrix::Zero(n_atoms, n_atoms);
  for (Eigen::Index a = 0; a < n_atoms; ++a) {
    const Eigen::Index u = part.atom_to_cell[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < n_atoms; ++b)
      out(a, b) = ak.values(u, part.atom_to_cell[static_cast<std::size_t>(b)]);
  }
  return out;
}

Matrix dn_operator_matrix(const Filtration& filt, int n) {
  if (n < 0 || n > filt.depth()) throw FiltrationError("level out of range");
  const MeasureSpace& space = *filt.space;
  if (space.atom_count() > 4096)
    throw FiltrationError("D_n materialization capped at 4096 atoms");
  const auto& part = filt.levels[static_cast<std::size_t>(n)];
  Matrix d = Matrix::Zero(space.atom_count(), space.atom_count());
  for (const auto& cell : part.cells) {
    if (cell.measure <= 0.0) continue;  // null-cell rows stay 0
    const double inv = 1.0 / cell.measure;
    for (auto a : cell.atom_indices)
      for (auto b : cell.atom_indices) d(a, b) = inv;
  }
  return d;
}

SandwichReport sandwich_identity_check(const Kernel& k, const Filtration& filt, int n,
                                       double tol) {
  const MeasureSpace& space = *filt.space;
  const Matrix samples = sample_kernel_matrix(k, space);
  const Vector w = space.weights();

  // route 1: triple composition D_n K D_n with measure weights
  const Matrix d = dn_operator_matrix(filt, n);
  const Matrix sandwich = d * w.asDiagonal() * samples * w.asDiagonal() * d;

  // route 2: block averages expanded back to atoms
  const Matrix averaged = expand_to_atoms(averaged_kernel(samples, filt, n));

  SandwichReport r;
  r.tolerance = tol;
  r.max_abs_diff = (sandwich - averaged).cwiseAbs().maxCoeff();
  r.pass = r.max_abs_diff <= tol;
  return r;
}

}  // namespace martrace
