#include "martrace/space.hpp"

#include <cmath>

namespace martrace {

bool is_finite_measure(const DomainKind& kind) {
  return !std::holds_alternative<HalfLine>(kind);
}

bool is_two_dimensional(const DomainKind& kind) {
  return std::holds_alternative<Torus2>(kind);
}

double density_value(const Density& d, double x) {
  return std::visit(
      [x](const auto& dd) -> double {
        using T = std::decay_t<decltype(dd)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return dd.c;
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          double v = 0.0;
          for (auto it = dd.coefficients.rbegin(); it != dd.coefficients.rend(); ++it)
            v = v * x + *it;
          return v;
        } else {
          return std::exp(-dd.rate * x);
        }
      },
      d);
}

double density_cumulative(const Density& d, double x) {
  return std::visit(
      [x](const auto& dd) -> double {
        using T = std::decay_t<decltype(dd)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return dd.c * x;
        } else if constexpr (std::is_same_v<T, Polynomial>) {
          double v = 0.0;
          const auto& c = dd.coefficients;
          for (std::size_t k = c.size(); k-- > 0;)
            v = v * x + c[k] / static_cast<double>(k + 1);
          return v * x;
        } else {
          return (1.0 - std::exp(-dd.rate * x)) / dd.rate;
        }
      },
      d);
}

double MeasureSpace::total_measure() const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.measure;
  return s;
}

Vector MeasureSpace::weights() const {
  Vector w(atom_count());
  for (Eigen::Index i = 0; i < atom_count(); ++i) w[i] = atoms[i].measure;
  return w;
}

double MeasureSpace::origin() const {
  if (const auto* iv = std::get_if<Interval>(&kind)) return iv->a;
  return 0.0;
}

double MeasureSpace::span_x() const {
  return std::visit(
      [this](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Interval>) return k.b - k.a;
        else if constexpr (std::is_same_v<T, Circle>) return k.circumference;
        else if constexpr (std::is_same_v<T, Torus2>) return k.circumference_x;
        else return *window;
      },
      kind);
}

double MeasureSpace::span_y() const {
  if (const auto* t = std::get_if<Torus2>(&kind)) return t->circumference_y;
  return 0.0;
}

Eigen::Index MeasureSpace::atoms_per_axis() const {
  return Eigen::Index{1} << atom_level;
}

namespace {

void check_density_nonnegative(const DomainKind& kind, const Density& density,
                               double origin, double span) {
  if (std::holds_alternative<ExponentialDecay>(density) &&
      !std::holds_alternative<HalfLine>(kind))
    throw SpaceError("exponential-decay density is half-line only");
  const int samples = 4096;
  for (int i = 0; i <= samples; ++i) {
    const double x = origin + span * static_cast<double>(i) / samples;
    if (density_value(density, x) < -1e-12)
      throw SpaceError("density is negative on the domain at x=" + std::to_string(x));
  }
}

}  // namespace

MeasureSpace build_space(const DomainKind& kind, const Density& density,
                         int atom_level, std::optional<double> window) {
  if (atom_level < 1 || atom_level > 16)
    throw SpaceError("atom_level must be in [1, 16]");
  const bool half_line = std::holds_alternative<HalfLine>(kind);
  if (half_line && !window)
    throw SpaceError("half-line space requires a truncation window");
  if (half_line && *window <= 0.0)
    throw SpaceError("truncation window must be positive");
  if (const auto* iv = std::get_if<Interval>(&kind))
    if (!(iv->a < iv->b)) throw SpaceError("interval requires a < b");
  if (const auto* c = std::get_if<Circle>(&kind))
    if (!(c->circumference > 0.0)) throw SpaceError("circumference must be positive");
  if (const auto* t = std::get_if<Torus2>(&kind))
    if (!(t->circumference_x > 0.0 && t->circumference_y > 0.0))
      throw SpaceError("circumferences must be positive");

  MeasureSpace space;
  space.kind = kind;
  space.density = density;
  space.atom_level = atom_level;
  if (half_line) space.window = window;

  const Eigen::Index n = Eigen::Index{1} << atom_level;
  const double x0 = space.origin();
  const double sx = space.span_x();
  check_density_nonnegative(kind, density, x0, sx);

  if (is_two_dimensional(kind)) {
    const double sy = space.span_y();
    const double hx = sx / static_cast<double>(n);
    const double hy = sy / static_cast<double>(n);
    space.atoms.reserve(static_cast<std::size_t>(n * n));
    for (Eigen::Index ix = 0; ix < n; ++ix) {
      const double lx = ix * hx, ux = (ix + 1) * hx;
      const double mx = density_cumulative(density, ux) - density_cumulative(density, lx);
      for (Eigen::Index iy = 0; iy < n; ++iy) {
        const double ly = iy * hy, uy = (iy + 1) * hy;
        const double my = density_cumulative(density, uy) - density_cumulative(density, ly);
        Atom a;
        a.index = ix * n + iy;
        a.lo_x = lx;
        a.hi_x = ux;
        a.lo_y = ly;
        a.hi_y = uy;
        a.measure = mx * my;
        a.rep = Point::on_torus(0.5 * (lx + ux), 0.5 * (ly + uy));
        if (a.measure <= 0.0) space.zero_measure_atoms.push_back(a.index);
        space.atoms.push_back(a);
      }
    }
  } else {
    const double h = sx / static_cast<double>(n);
    space.atoms.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      Atom a;
      a.index = i;
      a.lo_x = x0 + i * h;
      a.hi_x = x0 + (i + 1) * h;
      a.measure = density_cumulative(density, a.hi_x) - density_cumulative(density, a.lo_x);
      a.rep = Point::on_line(0.5 * (a.lo_x + a.hi_x));
      if (a.measure <= 0.0) space.zero_measure_atoms.push_back(a.index);
      space.atoms.push_back(a);
    }
  }
  return space;
}

Eigen::Index atom_of(const MeasureSpace& space, const Point& p) {
  const Eigen::Index n = space.atoms_per_axis();
  const double x0 = space.origin();
  const double sx = space.span_x();

  auto axis_index = [n](double t, double span, bool wrap) -> Eigen::Index {
    if (wrap) {
      t = std::fmod(t, span);
      if (t < 0.0) t += span;
    }
    if (t < 0.0 || t > span) throw SpaceError("point outside domain");
    auto i = static_cast<Eigen::Index>(std::floor(t / span * static_cast<double>(n)));
    // right endpoint of the last half-open cell
    if (i >= n) i = n - 1;
    return i;
  };

  return std::visit(
      [&](const auto& k) -> Eigen::Index {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Interval>) {
          return axis_index(p.x - x0, sx, false);
        } else if constexpr (std::is_same_v<T, Circle>) {
          return axis_index(p.x, sx, true);
        } else if constexpr (std::is_same_v<T, Torus2>) {
          const Eigen::Index ix = axis_index(p.x, sx, true);
          const Eigen::Index iy = axis_index(p.y, space.span_y(), true);
          return ix * n + iy;
        } else {
          if (p.x >= *space.window) throw SpaceError("point beyond half-line window");
          return axis_index(p.x, sx, false);
        }
      },
      space.kind);
}

}  // namespace martrace
