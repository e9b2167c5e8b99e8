#pragma once

#include "martrace/space.hpp"

namespace martrace {

// distance induced by the domain (wraps on the circle and the torus)
double domain_distance(const MeasureSpace& space, const Point& p, const Point& q);

struct BrownianMin {};  // min(x, y) on Interval(0, 1)
struct ExpAbs {
  double alpha;  // exp(-alpha * d(x, y))
};
struct GaussianRBF {
  double gamma;  // exp(-gamma * d(x, y)^2)
};
// sum_m 2 a_m cos(m (x - y)) on Circle(2*pi) with normalized measure
struct CosineSeries {
  enum class Coeffs { InverseSquare, Harmonic, Explicit };
  Coeffs tag = Coeffs::Explicit;
  std::vector<double> a;  // a[m-1] = a_m, m = 1..M
};
struct RankOneExp {};  // exp(-(x + y)) on the half-line
struct SampledGrid {
  Matrix values;  // dense atom x atom kernel samples
};

using KernelFamily =
    std::variant<BrownianMin, ExpAbs, GaussianRBF, CosineSeries, RankOneExp, SampledGrid>;

struct Kernel {
  std::string name;
  KernelFamily family;
  bool psd_claim = true;
};

struct KernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double eval(const Kernel& k, const MeasureSpace& space, const Point& p, const Point& q);

// x -> K(x, x) in closed form, when the family has one
std::optional<double> analytic_diagonal(const Kernel& k, const Point& p);

struct DiagonalIntegral {
  double value = 0.0;                // over the materialized domain / window
  std::optional<double> full_value;  // closed form over the whole domain
  bool divergent = false;            // diagonal not integrable as the window grows
};

DiagonalIntegral diagonal_integral(const Kernel& k, const MeasureSpace& space);

struct SpectrumTruth {
  std::vector<double> eigenvalues;  // decreasing, with multiplicity
  double trace = 0.0;
  bool divergent_trace = false;
  std::string note;
};

// analytic spectrum when the family has one; count limits the listed values
std::optional<SpectrumTruth> spectrum_truth(const Kernel& k, int count = 32);

// sum_{m > M} 2 a_m for truncated series kernels; nullopt when the full
// series diverges or the family is not a series
std::optional<double> truncation_tail(const Kernel& k);

std::vector<double> cosine_coeffs(CosineSeries::Coeffs tag, int terms);

Kernel make_brownian_min();
Kernel make_exp_abs(double alpha);
Kernel make_gaussian_rbf(double gamma);
Kernel make_cosine_series(CosineSeries::Coeffs tag, int terms);
Kernel make_cosine_series(std::vector<double> coeffs);
Kernel make_rank_one_exp();
Kernel make_sampled(Matrix values, bool psd_claim = false);

}  // namespace martrace
