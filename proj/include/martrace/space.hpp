#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace martrace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A point in the domain; 1-D kinds use x only, the 2-torus uses (x, y).
struct Point {
  double x = 0.0;
  double y = 0.0;
  int dim = 1;

  static Point on_line(double x) { return Point{x, 0.0, 1}; }
  static Point on_torus(double x, double y) { return Point{x, y, 2}; }
};

struct Interval {
  double a, b;
};
struct Circle {
  double circumference;
};
struct Torus2 {
  double circumference_x, circumference_y;
};
struct HalfLine {};

using DomainKind = std::variant<Interval, Circle, Torus2, HalfLine>;

bool is_finite_measure(const DomainKind& kind);
bool is_two_dimensional(const DomainKind& kind);

// Weight density with a closed-form cumulative so cell measures are exact.
struct Uniform {
  double c;
};
struct Polynomial {
  std::vector<double> coefficients;  // ascending degree
};
struct ExponentialDecay {
  double rate;  // density exp(-rate*x), half-line only
};

using Density = std::variant<Uniform, Polynomial, ExponentialDecay>;

double density_value(const Density& d, double x);
// Antiderivative of the density, normalized so cumulative(0) = 0.
double density_cumulative(const Density& d, double x);

struct Atom {
  Eigen::Index index;
  // geometric bounds; 1-D atoms use [lo_x, hi_x), torus atoms are rectangles
  double lo_x, hi_x;
  double lo_y = 0.0, hi_y = 0.0;
  double measure;
  Point rep;  // midpoint
};

// A measure space (X, mu) discretized into 2^atom_level dyadic atoms per
// axis, with exact per-atom measures from the density's cumulative.
class MeasureSpace {
 public:
  DomainKind kind;
  Density density;
  int atom_level = 0;
  std::optional<double> window;  // half-line truncation [0, T)
  std::vector<Atom> atoms;
  std::vector<Eigen::Index> zero_measure_atoms;

  Eigen::Index atom_count() const { return static_cast<Eigen::Index>(atoms.size()); }
  double total_measure() const;

  // per-atom measures as a weight vector
  Vector weights() const;

  // 1-D extent of the materialized domain: [origin, origin + span)
  double origin() const;
  double span_x() const;
  double span_y() const;
  Eigen::Index atoms_per_axis() const;
};

struct SpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

MeasureSpace build_space(const DomainKind& kind, const Density& density,
                         int atom_level, std::optional<double> window = {});

Eigen::Index atom_of(const MeasureSpace& space, const Point& p);

}  // namespace martrace
