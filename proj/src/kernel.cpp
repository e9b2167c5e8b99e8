#include "martrace/kernel.hpp"

#include <cmath>
#include <numbers>

namespace martrace {

namespace {

double wrap_dist(double d, double span) {
  d = std::fmod(std::abs(d), span);
  return std::min(d, span - d);
}

double cosine_sum(const std::vector<double>& a, double delta) {
  // Chebyshev-style recurrence for cos(m*delta)
  const double c1 = std::cos(delta);
  double cm1 = 1.0, cm = c1;
  double s = 0.0;
  for (double am : a) {
    s += 2.0 * am * cm;
    const double next = 2.0 * c1 * cm - cm1;
    cm1 = cm;
    cm = next;
  }
  return s;
}

// sum_{m > M} 1/m^2 via Euler-Maclaurin
double inverse_square_tail(int m_max) {
  const double m = static_cast<double>(m_max);
  return 1.0 / m - 1.0 / (2.0 * m * m) + 1.0 / (6.0 * m * m * m) -
         1.0 / (30.0 * m * m * m * m * m);
}

}  // namespace

double domain_distance(const MeasureSpace& space, const Point& p, const Point& q) {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Circle>) {
          return wrap_dist(p.x - q.x, k.circumference);
        } else if constexpr (std::is_same_v<T, Torus2>) {
          const double dx = wrap_dist(p.x - q.x, k.circumference_x);
          const double dy = wrap_dist(p.y - q.y, k.circumference_y);
          return std::hypot(dx, dy);
        } else {
          return std::abs(p.x - q.x);
        }
      },
      space.kind);
}

double eval(const Kernel& k, const MeasureSpace& space, const Point& p, const Point& q) {
  return std::visit(
      [&](const auto& fam) -> double {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, BrownianMin>) {
          return std::min(p.x, q.x);
        } else if constexpr (std::is_same_v<T, ExpAbs>) {
          return std::exp(-fam.alpha * domain_distance(space, p, q));
        } else if constexpr (std::is_same_v<T, GaussianRBF>) {
          const double d = domain_distance(space, p, q);
          return std::exp(-fam.gamma * d * d);
        } else if constexpr (std::is_same_v<T, CosineSeries>) {
          return cosine_sum(fam.a, p.x - q.x);
        } else if constexpr (std::is_same_v<T, RankOneExp>) {
          return std::exp(-(p.x + q.x));
        } else {
          const Eigen::Index i = atom_of(space, p);
          const Eigen::Index j = atom_of(space, q);
          if (fam.values.rows() != space.atom_count())
            throw KernelError("sampled grid size does not match the space");
          return fam.values(i, j);
        }
      },
      k.family);
}

std::optional<double> analytic_diagonal(const Kernel& k, const Point& p) {
  return std::visit(
      [&](const auto& fam) -> std::optional<double> {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, BrownianMin>) {
          return p.x;
        } else if constexpr (std::is_same_v<T, ExpAbs> || std::is_same_v<T, GaussianRBF>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, CosineSeries>) {
          double s = 0.0;
          for (double am : fam.a) s += 2.0 * am;
          return s;
        } else if constexpr (std::is_same_v<T, RankOneExp>) {
          return std::exp(-2.0 * p.x);
        } else {
          return std::nullopt;
        }
      },
      k.family);
}

DiagonalIntegral diagonal_integral(const Kernel& k, const MeasureSpace& space) {
  DiagonalIntegral out;
  const bool half_line = std::holds_alternative<HalfLine>(space.kind);

  // closed forms first
  if (std::holds_alternative<RankOneExp>(k.family) && half_line) {
    if (const auto* u = std::get_if<Uniform>(&space.density); u && u->c == 1.0) {
      out.value = 0.5 * (1.0 - std::exp(-2.0 * *space.window));
      out.full_value = 0.5;
      return out;
    }
  }
  if (std::holds_alternative<BrownianMin>(k.family)) {
    if (const auto* iv = std::get_if<Interval>(&space.kind)) {
      if (const auto* u = std::get_if<Uniform>(&space.density)) {
        out.value = 0.5 * u->c * (iv->b * iv->b - iv->a * iv->a);
        out.full_value = out.value;
        return out;
      }
    }
  }
  if (const auto* cs = std::get_if<CosineSeries>(&k.family)) {
    double diag = 0.0;
    for (double am : cs->a) diag += 2.0 * am;
    out.value = diag * space.total_measure();
    out.full_value = out.value;
    return out;
  }

  // atom-midpoint quadrature
  double s = 0.0;
  for (const auto& a : space.atoms) {
    const auto d = analytic_diagonal(k, a.rep);
    double v;
    if (d) {
      v = *d;
    } else if (const auto* g = std::get_if<SampledGrid>(&k.family)) {
      v = g->values(a.index, a.index);
    } else {
      v = eval(k, space, a.rep, a.rep);
    }
    s += v * a.measure;
  }
  out.value = s;

  // constant-diagonal kernels are not integrable over an unbounded domain
  if (half_line && (std::holds_alternative<ExpAbs>(k.family) ||
                    std::holds_alternative<GaussianRBF>(k.family)))
    out.divergent = true;
  return out;
}

std::optional<SpectrumTruth> spectrum_truth(const Kernel& k, int count) {
  using std::numbers::pi;
  return std::visit(
      [&](const auto& fam) -> std::optional<SpectrumTruth> {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, BrownianMin>) {
          SpectrumTruth t;
          for (int j = 1; j <= count; ++j)
            t.eigenvalues.push_back(1.0 / (pi * pi * (j - 0.5) * (j - 0.5)));
          t.trace = 0.5;
          t.note = "Sturm-Liouville spectrum of the min kernel on [0,1]";
          return t;
        } else if constexpr (std::is_same_v<T, CosineSeries>) {
          SpectrumTruth t;
          for (double am : fam.a) {
            t.eigenvalues.push_back(am);  // cos mode
            t.eigenvalues.push_back(am);  // sin mode
            t.trace += 2.0 * am;
          }
          std::sort(t.eigenvalues.begin(), t.eigenvalues.end(), std::greater<>());
          if (t.eigenvalues.size() > static_cast<std::size_t>(count))
            t.eigenvalues.resize(static_cast<std::size_t>(count));
          t.divergent_trace = fam.tag == CosineSeries::Coeffs::Harmonic;
          t.note = "Fourier modes, multiplicity 2 per frequency";
          return t;
        } else if constexpr (std::is_same_v<T, RankOneExp>) {
          SpectrumTruth t;
          t.eigenvalues = {0.5};
          t.trace = 0.5;
          t.note = "rank-one kernel, eigenvalue = diagonal integral";
          return t;
        } else {
          return std::nullopt;
        }
      },
      k.family);
}

std::optional<double> truncation_tail(const Kernel& k) {
  const auto* cs = std::get_if<CosineSeries>(&k.family);
  if (!cs) return std::nullopt;
  switch (cs->tag) {
    case CosineSeries::Coeffs::InverseSquare:
      return 2.0 * inverse_square_tail(static_cast<int>(cs->a.size()));
    case CosineSeries::Coeffs::Harmonic:
      return std::nullopt;  // full series diverges
    case CosineSeries::Coeffs::Explicit:
      return 0.0;
  }
  return std::nullopt;
}

std::vector<double> cosine_coeffs(CosineSeries::Coeffs tag, int terms) {
  std::vector<double> a(static_cast<std::size_t>(terms));
  for (int m = 1; m <= terms; ++m) {
    const double mm = static_cast<double>(m);
    a[static_cast<std::size_t>(m - 1)] =
        tag == CosineSeries::Coeffs::InverseSquare ? 1.0 / (mm * mm) : 1.0 / mm;
  }
  return a;
}

Kernel make_brownian_min() { return {"brownian_min", BrownianMin{}, true}; }

Kernel make_exp_abs(double alpha) {
  if (alpha <= 0.0) throw KernelError("exp_abs requires alpha > 0");
  return {"exp_abs", ExpAbs{alpha}, true};
}

Kernel make_gaussian_rbf(double gamma) {
  if (gamma <= 0.0) throw KernelError("gaussian_rbf requires gamma > 0");
  return {"gaussian_rbf", GaussianRBF{gamma}, true};
}

Kernel make_cosine_series(CosineSeries::Coeffs tag, int terms) {
  if (terms < 1) throw KernelError("cosine series needs at least one term");
  CosineSeries cs;
  cs.tag = tag;
  cs.a = cosine_coeffs(tag, terms);
  const char* name = tag == CosineSeries::Coeffs::InverseSquare ? "cosine_inverse_square"
                                                                : "cosine_harmonic";
  return {name, std::move(cs), true};
}

Kernel make_cosine_series(std::vector<double> coeffs) {
  if (coeffs.empty()) throw KernelError("cosine series needs at least one term");
  for (double c : coeffs)
    if (c < 0.0) throw KernelError("cosine series coefficients must be nonnegative");
  CosineSeries cs;
  cs.tag = CosineSeries::Coeffs::Explicit;
  cs.a = std::move(coeffs);
  return {"cosine_series", std::move(cs), true};
}

Kernel make_rank_one_exp() { return {"rank_one_exp", RankOneExp{}, true}; }

Kernel make_sampled(Matrix values, bool psd_claim) {
  if (values.rows() != values.cols()) throw KernelError("sampled grid must be square");
  return {"sampled", SampledGrid{std::move(values)}, psd_claim};
}

}  // namespace martrace
