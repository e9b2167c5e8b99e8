#pragma once

#include "martrace/sigma_finite.hpp"

#include <cstdint>
#include <filesystem>

namespace martrace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StudyFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FiltrationDesc {
  FiltrationMode mode = FiltrationMode::Dyadic;
  int depth = 8;
  std::vector<std::pair<double, double>> cover;  // cover mode: 1-D interval endpoints
  std::string basis = "dyadic_bfs";
};

struct ExperimentConfig {
  DomainKind kind = Interval{0.0, 1.0};
  Density density = Uniform{1.0};
  int atom_level = 8;
  std::optional<double> window;

  Kernel kernel = make_brownian_min();
  std::optional<std::filesystem::path> sampled_path;  // sampled-grid kernels

  FiltrationDesc filtration;

  std::string study = "trace_study";
  int n_min = 2;
  int n_max = 8;
  int top_k = 5;
  int j_max = 8;
  int stages = 8;
  int suite_size = 50;
  std::uint64_t seed = 42;
  double tol_sandwich = 1e-10;

  std::string out_dir = ".";
  std::string config_echo;  // raw config text, echoed into the manifest
};

ExperimentConfig parse_config_file(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);

// runs the configured study and writes <study>.csv, <study>.json and
// manifest.json into out_dir; returns the process exit status (0 ok,
// 3 when a study-internal assertion fails)
int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                   int threads = 1);

std::string catalog_text(const std::string& filter = "");

const char* version_string();

// the kernel/space pairs exercised by the property and identity studies
struct CatalogEntry {
  Kernel kernel;
  MeasureSpace space;
};

std::vector<CatalogEntry> standard_catalog(int atom_level);

// seeded random atom functions used by the martingale suites
std::vector<Vector> random_function_suite(const MeasureSpace& space, int count,
                                          std::uint64_t seed);

Filtration build_filtration(const MeasureSpace& space, const FiltrationDesc& desc);

std::string format_real(double v);  // 17 significant digits, '.' decimal

}  // namespace martrace
