#include "martrace/experiment.hpp"

#include "martrace/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace martrace {

using nlohmann::json;
namespace fs = std::filesystem;

const char* version_string() { return "martrace 0.1.0"; }

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + context);
  }
}

double require_number(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError("missing or non-numeric field '" + std::string(key) + "' in " +
                      context);
  return j[key].get<double>();
}

Density parse_density(const json& j) {
  if (!j.is_object() || !j.contains("family"))
    throw ConfigError("density must be an object with a 'family' field");
  const std::string fam = j["family"].get<std::string>();
  if (fam == "uniform") {
    check_keys(j, {"family", "c"}, "density");
    const double c = require_number(j, "c", "density");
    if (c <= 0.0) throw ConfigError("uniform density requires c > 0");
    return Uniform{c};
  }
  if (fam == "polynomial") {
    check_keys(j, {"family", "coefficients"}, "density");
    if (!j.contains("coefficients") || !j["coefficients"].is_array())
      throw ConfigError("polynomial density requires a 'coefficients' array");
    return Polynomial{j["coefficients"].get<std::vector<double>>()};
  }
  if (fam == "exponential_decay") {
    check_keys(j, {"family", "rate"}, "density");
    const double rate = require_number(j, "rate", "density");
    if (rate <= 0.0) throw ConfigError("exponential_decay requires rate > 0");
    return ExponentialDecay{rate};
  }
  throw ConfigError("unknown density family '" + fam + "'");
}

void parse_space(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("space must be an object with a 'kind' field");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "interval") {
    check_keys(j, {"kind", "a", "b", "density", "atom_level"}, "space");
    cfg.kind = Interval{require_number(j, "a", "space"), require_number(j, "b", "space")};
  } else if (kind == "circle") {
    check_keys(j, {"kind", "circumference", "density", "atom_level"}, "space");
    cfg.kind = Circle{require_number(j, "circumference", "space")};
  } else if (kind == "torus2") {
    check_keys(j, {"kind", "circumference_x", "circumference_y", "density", "atom_level"},
               "space");
    cfg.kind = Torus2{require_number(j, "circumference_x", "space"),
                      require_number(j, "circumference_y", "space")};
  } else if (kind == "half_line") {
    check_keys(j, {"kind", "window", "density", "atom_level"}, "space");
    cfg.kind = HalfLine{};
    cfg.window = require_number(j, "window", "space");
  } else {
    throw ConfigError("unknown space kind '" + kind + "'");
  }
  if (!j.contains("density")) throw ConfigError("space requires a 'density' field");
  cfg.density = parse_density(j["density"]);
  cfg.atom_level = static_cast<int>(require_number(j, "atom_level", "space"));
  if (cfg.atom_level < 1 || cfg.atom_level > 16)
    throw ConfigError("atom_level must be in [1, 16]");
}

void parse_kernel_checked(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object() || !j.contains("family"))
    throw ConfigError("kernel must be an object with a 'family' field");
  const std::string fam = j["family"].get<std::string>();
  if (fam == "brownian_min") {
    check_keys(j, {"family"}, "kernel");
    cfg.kernel = make_brownian_min();
  } else if (fam == "exp_abs") {
    check_keys(j, {"family", "alpha"}, "kernel");
    cfg.kernel = make_exp_abs(require_number(j, "alpha", "kernel"));
  } else if (fam == "gaussian_rbf") {
    check_keys(j, {"family", "gamma"}, "kernel");
    cfg.kernel = make_gaussian_rbf(require_number(j, "gamma", "kernel"));
  } else if (fam == "cosine_series") {
    check_keys(j, {"family", "coeffs", "M"}, "kernel");
    int terms = 200;
    if (j.contains("M")) terms = static_cast<int>(require_number(j, "M", "kernel"));
    if (!j.contains("coeffs")) throw ConfigError("cosine_series requires 'coeffs'");
    if (j["coeffs"].is_array()) {
      cfg.kernel = make_cosine_series(j["coeffs"].get<std::vector<double>>());
    } else {
      const std::string tag = j["coeffs"].get<std::string>();
      if (tag == "inverse_square")
        cfg.kernel = make_cosine_series(CosineSeries::Coeffs::InverseSquare, terms);
      else if (tag == "harmonic")
        cfg.kernel = make_cosine_series(CosineSeries::Coeffs::Harmonic, terms);
      else
        throw ConfigError("unknown cosine_series coeffs tag '" + tag + "'");
    }
  } else if (fam == "rank_one_exp") {
    check_keys(j, {"family"}, "kernel");
    cfg.kernel = make_rank_one_exp();
  } else if (fam == "sampled") {
    check_keys(j, {"family", "path", "psd"}, "kernel");
    if (!j.contains("path")) throw ConfigError("sampled kernel requires 'path'");
    const fs::path p = j["path"].get<std::string>();
    if (!fs::exists(p)) throw ConfigError("sampled grid file not found: " + p.string());
    cfg.sampled_path = p;
    cfg.kernel.name = "sampled";
    cfg.kernel.psd_claim = j.value("psd", false);
  } else {
    throw ConfigError("unknown kernel family '" + fam + "'");
  }
}

// kernel parameter violations are configuration mistakes here
void parse_kernel(const json& j, ExperimentConfig& cfg) {
  try {
    parse_kernel_checked(j, cfg);
  } catch (const KernelError& e) {
    throw ConfigError(e.what());
  }
}

void parse_filtration(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object()) throw ConfigError("filtration must be an object");
  const std::string mode = j.value("mode", "dyadic");
  if (mode == "dyadic") {
    check_keys(j, {"mode", "depth"}, "filtration");
    cfg.filtration.mode = FiltrationMode::Dyadic;
  } else if (mode == "cover") {
    check_keys(j, {"mode", "depth", "cover", "basis"}, "filtration");
    cfg.filtration.mode = FiltrationMode::CoverBased;
    if (!j.contains("cover") || !j["cover"].is_array())
      throw ConfigError("cover filtration requires a 'cover' array");
    for (const auto& pair : j["cover"]) {
      if (!pair.is_array() || pair.size() != 2)
        throw ConfigError("cover entries must be [lo, hi] pairs");
      cfg.filtration.cover.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    cfg.filtration.basis = j.value("basis", "dyadic_bfs");
    if (cfg.filtration.basis != "dyadic_bfs")
      throw ConfigError("unknown basis schedule '" + cfg.filtration.basis + "'");
  } else {
    throw ConfigError("unknown filtration mode '" + mode + "'");
  }
  cfg.filtration.depth = static_cast<int>(require_number(j, "depth", "filtration"));
}

const std::vector<std::string>& known_studies() {
  static const std::vector<std::string> studies = {
      "trace_study",      "spectrum",          "doob_convergence", "maximal_function",
      "sandwich_identity", "truncation_study", "property_suite"};
  return studies;
}

ExperimentConfig parse_config_json(const json& root, std::string echo) {
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(root, {"space", "kernel", "filtration", "study", "params", "out_dir"},
             "config");
  ExperimentConfig cfg;
  cfg.config_echo = std::move(echo);
  if (!root.contains("space")) throw ConfigError("config requires 'space'");
  parse_space(root["space"], cfg);
  if (!root.contains("kernel")) throw ConfigError("config requires 'kernel'");
  parse_kernel(root["kernel"], cfg);
  if (root.contains("filtration")) parse_filtration(root["filtration"], cfg);
  else cfg.filtration.depth = std::min(8, cfg.atom_level);

  if (!root.contains("study")) throw ConfigError("config requires 'study'");
  cfg.study = root["study"].get<std::string>();
  const auto& studies = known_studies();
  if (std::find(studies.begin(), studies.end(), cfg.study) == studies.end())
    throw ConfigError("unknown study '" + cfg.study + "'");

  cfg.n_max = cfg.filtration.depth;
  if (root.contains("params")) {
    const json& p = root["params"];
    check_keys(p,
               {"n_min", "n_max", "top_k", "j_max", "stages", "suite_size", "seed",
                "tol_sandwich"},
               "params");
    cfg.n_min = static_cast<int>(p.value("n_min", double(cfg.n_min)));
    cfg.n_max = static_cast<int>(p.value("n_max", double(cfg.n_max)));
    cfg.top_k = static_cast<int>(p.value("top_k", double(cfg.top_k)));
    cfg.j_max = static_cast<int>(p.value("j_max", double(cfg.j_max)));
    cfg.stages = static_cast<int>(p.value("stages", double(cfg.stages)));
    cfg.suite_size = static_cast<int>(p.value("suite_size", double(cfg.suite_size)));
    cfg.seed = p.value("seed", std::uint64_t{42});
    cfg.tol_sandwich = p.value("tol_sandwich", 1e-10);
  }
  if (root.contains("out_dir")) cfg.out_dir = root["out_dir"].get<std::string>();

  // validate before any computation; cover depth counts basis splits, so it
  // is only capped by the basis schedule later
  if (cfg.filtration.mode == FiltrationMode::Dyadic &&
      cfg.filtration.depth > cfg.atom_level)
    throw ConfigError("filtration depth exceeds atom_level");
  if (cfg.n_min < 0 || cfg.n_min > cfg.n_max || cfg.n_max > cfg.filtration.depth)
    throw ConfigError("level range [n_min, n_max] must fit within the filtration depth");
  const Eigen::Index per_axis = Eigen::Index{1} << cfg.atom_level;
  const Eigen::Index atoms =
      is_two_dimensional(cfg.kind) ? per_axis * per_axis : per_axis;
  if (atoms > 4096) throw ConfigError("atom budget exceeded (max 4096 for dense studies)");
  if (std::holds_alternative<HalfLine>(cfg.kind) && !cfg.window)
    throw ConfigError("half-line space requires 'window'");
  return cfg;
}

Matrix load_grid_csv(const fs::path& path, Eigen::Index atoms) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file: " + path.string());
  Matrix m(atoms, atoms);
  std::string line;
  for (Eigen::Index i = 0; i < atoms; ++i) {
    if (!std::getline(in, line))
      throw ConfigError("grid file has fewer rows than atoms: " + path.string());
    std::stringstream ss(line);
    std::string cellv;
    for (Eigen::Index j = 0; j < atoms; ++j) {
      if (!std::getline(ss, cellv, ','))
        throw ConfigError("grid file row too short: " + path.string());
      m(i, j) = std::stod(cellv);
    }
  }
  return m;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config_json(root, text);
}

ExperimentConfig parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// catalog

std::vector<CatalogEntry> standard_catalog(int atom_level) {
  using std::numbers::pi;
  std::vector<CatalogEntry> out;
  const auto unit = Interval{0.0, 1.0};
  out.push_back({make_brownian_min(), build_space(unit, Uniform{1.0}, atom_level)});
  out.push_back({make_exp_abs(1.0), build_space(unit, Uniform{1.0}, atom_level)});
  out.push_back({make_gaussian_rbf(10.0), build_space(unit, Uniform{1.0}, atom_level)});
  out.push_back({make_cosine_series(CosineSeries::Coeffs::InverseSquare, 200),
                 build_space(Circle{2.0 * pi}, Uniform{1.0 / (2.0 * pi)}, atom_level)});
  out.push_back({make_cosine_series(CosineSeries::Coeffs::Harmonic, 200),
                 build_space(Circle{2.0 * pi}, Uniform{1.0 / (2.0 * pi)}, atom_level)});
  out.push_back(
      {make_rank_one_exp(), build_space(HalfLine{}, Uniform{1.0}, atom_level, 8.0)});
  return out;
}

std::string catalog_text(const std::string& filter) {
  std::vector<std::string> lines = {
      "kernel brownian_min        min(x,y) on Interval(0,1); spectrum 1/(pi^2 (j-1/2)^2)",
      "kernel exp_abs             exp(-alpha |x-y|); parameter alpha > 0",
      "kernel gaussian_rbf        exp(-gamma d(x,y)^2); parameter gamma > 0",
      "kernel cosine_series       sum 2 a_m cos(m(x-y)) on Circle(2pi); coeffs inverse_square | harmonic | explicit list",
      "kernel rank_one_exp        exp(-(x+y)) on the half-line; trace 1/2",
      "kernel sampled             dense atom x atom grid from CSV",
      "space  interval            [a, b) with uniform or polynomial density",
      "space  circle              circumference C, wraparound metric",
      "space  torus2              product of two circles",
      "space  half_line           [0, window) truncation of [0, inf)",
      "density uniform | polynomial | exponential_decay",
  };
  for (const auto& s : known_studies()) lines.push_back("study  " + s);
  std::string out;
  for (const auto& l : lines)
    if (filter.empty() || l.find(filter) != std::string::npos) out += l + "\n";
  return out;
}

std::vector<Vector> random_function_suite(const MeasureSpace& space, int count,
                                          std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Vector v(space.atom_count());
    for (Eigen::Index a = 0; a < v.size(); ++a) v[a] = rng.uniform_sym();
    out.push_back(std::move(v));
  }
  return out;
}

Filtration build_filtration(const MeasureSpace& space, const FiltrationDesc& desc) {
  if (desc.mode == FiltrationMode::Dyadic) return build_dyadic(space, desc.depth);

  if (is_two_dimensional(space.kind))
    throw ConfigError("cover-based filtrations are 1-D only");
  const Eigen::Index n = space.atoms_per_axis();
  const double x0 = space.origin();
  const double h = space.span_x() / static_cast<double>(n);

  auto to_atom_boundary = [&](double x) -> Eigen::Index {
    const double t = (x - x0) / h;
    const double r = std::round(t);
    if (std::abs(t - r) > 1e-9)
      throw ConfigError("cover endpoint " + format_real(x) + " is not grid-aligned");
    return static_cast<Eigen::Index>(r);
  };

  Cover cover;
  for (const auto& [lo, hi] : desc.cover) {
    const Eigen::Index a = to_atom_boundary(lo), b = to_atom_boundary(hi);
    if (a < 0 || b > n || a >= b) throw ConfigError("bad cover interval");
    AtomSet s;
    for (Eigen::Index i = a; i < b; ++i) s.push_back(i);
    cover.sets.push_back(std::move(s));
  }
  const auto basis = dyadic_bfs_basis(space, space.atom_level);
  if (static_cast<std::size_t>(desc.depth) > basis.size())
    throw ConfigError("cover filtration depth exceeds the dyadic basis schedule");
  return build_from_cover(space, cover, basis, desc.depth);
}

// ---------------------------------------------------------------------------
// studies

namespace {

struct StudyOutput {
  std::string csv;
  json summary;
  bool ok = true;
};

void append_row(std::string& csv, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) csv += ',';
    csv += fields[i];
  }
  csv += '\n';
}

StudyOutput study_trace(const ExperimentConfig& cfg, const Kernel& kernel,
                        const Filtration& filt) {
  const TraceReport rep = trace_study(kernel, filt, cfg.n_min, cfg.n_max, cfg.top_k);

  StudyOutput out;
  std::vector<std::string> header = {"n", "t_n", "tr_sandwich"};
  for (int j = 1; j <= cfg.top_k; ++j) header.push_back("lambda_" + std::to_string(j));
  for (int j = 1; j <= cfg.top_k; ++j) header.push_back("gap_" + std::to_string(j));
  append_row(out.csv, header);
  for (const auto& lvl : rep.levels) {
    std::vector<std::string> row = {std::to_string(lvl.n), format_real(lvl.t_n),
                                    format_real(lvl.tr_sandwich)};
    for (int j = 0; j < cfg.top_k; ++j)
      row.push_back(format_real(j < lvl.top_eigenvalues.size() ? lvl.top_eigenvalues[j]
                                                               : 0.0));
    for (int j = 0; j < cfg.top_k; ++j)
      row.push_back(format_real(j < lvl.eigenvalue_gaps.size() ? lvl.eigenvalue_gaps[j]
                                                               : 0.0));
    append_row(out.csv, row);
  }

  out.summary = {{"study", "trace_study"},
                 {"kernel", kernel.name},
                 {"verdict", verdict_name(rep.verdict)},
                 {"trace_estimate", rep.trace_estimate},
                 {"corrected_estimate", rep.corrected_estimate},
                 {"diag_vs_sandwich_max_rel", rep.diag_vs_sandwich_max_rel},
                 {"increments", rep.increments},
                 {"growth_slope", rep.growth_slope}};
  if (rep.tail_correction) out.summary["tail_correction"] = *rep.tail_correction;
  out.ok = rep.diag_vs_sandwich_max_rel <= 1e-8;
  return out;
}

StudyOutput study_spectrum(const ExperimentConfig& cfg, const Kernel& kernel,
                           const MeasureSpace& space) {
  const OperatorMatrix om = assemble(kernel, space);
  const SpectralDecomposition dec = eigendecompose(om.symmetrized);
  const auto truth = spectrum_truth(kernel);

  StudyOutput out;
  append_row(out.csv, {"j", "lambda_j", "s_j", "truth_j", "rel_err"});
  const Eigen::Index kshow = std::min<Eigen::Index>(cfg.top_k, dec.eigenvalues.size());
  for (Eigen::Index j = 0; j < kshow; ++j) {
    double tr = std::nan(""), rel = std::nan("");
    if (truth && j < static_cast<Eigen::Index>(truth->eigenvalues.size())) {
      tr = truth->eigenvalues[static_cast<std::size_t>(j)];
      rel = std::abs(dec.eigenvalues[j] - tr) / std::abs(tr);
    }
    append_row(out.csv, {std::to_string(j + 1), format_real(dec.eigenvalues[j]),
                         format_real(dec.singular_values[j]), format_real(tr),
                         format_real(rel)});
  }
  out.summary = {{"study", "spectrum"},
                 {"kernel", kernel.name},
                 {"residual", dec.residual},
                 {"trace", dec.eigenvalues.sum()},
                 {"min_eigenvalue", dec.eigenvalues[dec.eigenvalues.size() - 1]},
                 {"max_eigenvalue", dec.eigenvalues[0]}};
  if (truth) {
    out.summary["trace_truth"] = truth->trace;
    out.summary["divergent_trace"] = truth->divergent_trace;
  }
  return out;
}

StudyOutput study_doob(const ExperimentConfig& cfg, const Filtration& filt) {
  const MeasureSpace& space = *filt.space;
  const auto suite = random_function_suite(space, cfg.suite_size, cfg.seed);

  StudyOutput out;
  append_row(out.csv, {"n", "max_l2_error"});
  std::vector<double> errs;
  for (int n = 1; n <= filt.depth(); ++n) {
    double worst = 0.0;
    for (const auto& values : suite) {
      const GridFunction f{&space, values};
      const GridFunction en = conditional_expectation(f, filt, n);
      const GridFunction diff{&space, en.values - values};
      worst = std::max(worst, weighted_norm(diff, 2.0));
    }
    errs.push_back(worst);
    append_row(out.csv, {std::to_string(n), format_real(worst)});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < errs.size(); ++i)
    if (errs[i] > errs[i - 1] + 1e-12) monotone = false;
  const bool reaches_zero =
      filt.depth() < space.atom_level || errs.empty() || errs.back() <= 1e-12;

  out.summary = {{"study", "doob_convergence"},
                 {"suite_size", cfg.suite_size},
                 {"monotone", monotone},
                 {"final_error", errs.empty() ? 0.0 : errs.back()},
                 {"reaches_zero_at_full_depth", reaches_zero}};
  out.ok = reaches_zero && (filt.mode != FiltrationMode::Dyadic || monotone);
  return out;
}

StudyOutput study_maximal(const ExperimentConfig& cfg, const Filtration& filt) {
  const MeasureSpace& space = *filt.space;
  const auto suite = random_function_suite(space, cfg.suite_size, cfg.seed);
  const bool full_depth = filt.depth() == space.atom_level;

  StudyOutput out;
  append_row(out.csv, {"i", "norm_ratio", "dominates"});
  double worst_ratio = 0.0;
  bool all_dominate = true;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const GridFunction f{&space, suite[i]};
    const GridFunction mf = maximal_function(f, filt);
    const double ratio = weighted_norm(mf, 2.0) / weighted_norm(f, 2.0);
    worst_ratio = std::max(worst_ratio, ratio);
    bool dom = true;
    if (full_depth)
      for (Eigen::Index a = 0; a < f.values.size(); ++a)
        if (space.atoms[static_cast<std::size_t>(a)].measure > 0.0 &&
            std::abs(f.values[a]) > mf.values[a] + 1e-12)
          dom = false;
    if (!dom) all_dominate = false;
    append_row(out.csv, {std::to_string(i), format_real(ratio), dom ? "1" : "0"});
  }
  out.summary = {{"study", "maximal_function"},
                 {"worst_l2_ratio", worst_ratio},
                 {"doob_bound", 2.0},
                 {"all_dominate_at_full_depth", all_dominate}};
  out.ok = worst_ratio <= 2.0 + 1e-12 && all_dominate;
  return out;
}

StudyOutput study_sandwich(const ExperimentConfig& cfg, const Kernel& kernel,
                           const Filtration& filt) {
  StudyOutput out;
  append_row(out.csv, {"n", "max_abs_diff", "pass"});
  double worst = 0.0;
  for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
    const SandwichReport r = sandwich_identity_check(kernel, filt, n, cfg.tol_sandwich);
    worst = std::max(worst, r.max_abs_diff);
    if (!r.pass) out.ok = false;
    append_row(out.csv,
               {std::to_string(n), format_real(r.max_abs_diff), r.pass ? "1" : "0"});
  }
  out.summary = {{"study", "sandwich_identity"},
                 {"kernel", kernel.name},
                 {"tolerance", cfg.tol_sandwich},
                 {"max_abs_diff", worst},
                 {"pass", out.ok}};
  return out;
}

StudyOutput study_truncation(const ExperimentConfig& cfg, const Kernel& kernel,
                             const Filtration& filt) {
  const Exhaustion ex = build_exhaustion(*filt.space, cfg.stages);
  const TruncatedTraceReport rep =
      truncated_averaged_trace(kernel, filt, cfg.n_max, ex);

  StudyOutput out;
  append_row(out.csv,
             {"j", "T_j", "truncated_trace", "truncated_diag_integral",
              "spectral_gap_check"});
  for (const auto& st : rep.stages)
    append_row(out.csv, {std::to_string(st.stage + 1), format_real(st.cutoff),
                         format_real(st.trace_eigsum), format_real(st.diag_integral),
                         format_real(st.spectral_gap)});
  out.summary = {{"study", "truncation_study"},
                 {"kernel", kernel.name},
                 {"level", rep.level},
                 {"monotone", rep.monotone},
                 {"max_trace_rel_mismatch", rep.max_trace_rel},
                 {"final_value", rep.stages.empty() ? 0.0 : rep.stages.back().diag_integral}};
  if (rep.tail_bound) out.summary["window_tail_bound"] = *rep.tail_bound;
  else out.summary["window_tail_bound"] = "unknown";
  out.ok = rep.monotone && rep.max_trace_rel <= 1e-8;
  return out;
}

StudyOutput study_properties(const ExperimentConfig& cfg) {
  StudyOutput out;
  append_row(out.csv, {"property", "kernel", "value", "pass"});
  bool all_ok = true;
  auto row = [&](const std::string& prop, const std::string& kname, double value,
                 bool pass) {
    append_row(out.csv, {prop, kname, format_real(value), pass ? "1" : "0"});
    if (!pass) all_ok = false;
  };

  const int level = std::min(cfg.atom_level, 6);
  auto entries = standard_catalog(level);
  for (const auto& entry : entries) {
    const MeasureSpace& space = entry.space;
    const Kernel& kernel = entry.kernel;
    const Filtration filt = build_dyadic(space, level);
    const Matrix samples = sample_kernel_matrix(kernel, space);

    row("kernel_symmetry", kernel.name, (samples - samples.transpose()).cwiseAbs().maxCoeff(),
        (samples - samples.transpose()).cwiseAbs().maxCoeff() == 0.0);

    const OperatorMatrix om = assemble(samples, space);
    const Vector eig = symmetric_eigenvalues(om.symmetrized);
    const double lam_max = eig[0], lam_min = eig[eig.size() - 1];
    if (kernel.psd_claim)
      row("psd_operator", kernel.name, lam_min, lam_min >= -1e-10 * std::abs(lam_max));

    for (int n : {1, level / 2, level}) {
      const SandwichReport sr = sandwich_identity_check(kernel, filt, n, 1e-10);
      row("sandwich_n" + std::to_string(n), kernel.name, sr.max_abs_diff, sr.pass);
      const AveragedKernel ak = averaged_kernel(samples, filt, n);
      const Vector ceig = symmetric_eigenvalues(averaged_cell_operator(ak));
      if (kernel.psd_claim)
        row("psd_averaged_n" + std::to_string(n), kernel.name, ceig[ceig.size() - 1],
            ceig[ceig.size() - 1] >= -1e-10 * std::abs(std::max(ceig[0], lam_max)));
    }

    // trace equals eigenvalue sum on the symmetrized matrix
    const double tr_direct = om.symmetrized.trace();
    const double tr_eig = eig.sum();
    row("trace_eigsum", kernel.name, std::abs(tr_direct - tr_eig),
        std::abs(tr_direct - tr_eig) <= 1e-9 * std::max(1.0, std::abs(tr_direct)));

    const auto truth = spectrum_truth(kernel);
    if (truth && !truth->divergent_trace) {
      const UpperBoundReport ub = upper_bound_check(kernel, filt, 1, level);
      row("upper_bound", kernel.name,
          ub.levels.empty() ? 0.0 : ub.levels.back().slack, ub.pass);
    }

    const SingularValueReport sv =
        singular_value_convergence(kernel, filt, std::min(cfg.j_max, 6),
                                   std::max(1, level - 3));
    row("weyl_bound", kernel.name, 0.0, sv.weyl_all_ok);
    row("sv_final_gap", kernel.name, sv.levels.back().gap.maxCoeff(), sv.final_gap_ok);
  }

  // martingale properties on the unit interval
  {
    const MeasureSpace& space = entries[0].space;
    const Filtration filt = build_dyadic(space, level);
    const auto suite = random_function_suite(space, std::min(cfg.suite_size, 10), cfg.seed);
    double worst = 0.0;
    bool ok = true;
    for (const auto& values : suite) {
      const GridFunction f{&space, values};
      for (double p : {1.0, 2.0, 0.0}) {
        const double nf = weighted_norm(f, p);
        for (int n = 1; n <= level; ++n) {
          const double ne = weighted_norm(conditional_expectation(f, filt, n), p);
          worst = std::max(worst, ne - nf);
          if (ne > nf + 1e-12) ok = false;
        }
      }
    }
    row("contraction", "suite", worst, ok);

    worst = 0.0;
    ok = true;
    for (const auto& values : suite) {
      const GridFunction f{&space, values};
      for (int n = 2; n <= level; ++n) {
        const GridFunction en = conditional_expectation(f, filt, n);
        for (int m = 1; m < n; ++m) {
          const GridFunction lhs = conditional_expectation(en, filt, m);
          const GridFunction rhs = conditional_expectation(f, filt, m);
          const double d = (lhs.values - rhs.values).cwiseAbs().maxCoeff();
          worst = std::max(worst, d);
          if (d > 1e-12) ok = false;
        }
      }
    }
    row("tower", "suite", worst, ok);

    const Matrix d1 = dn_operator_matrix(filt, std::max(1, level - 1));
    const Vector w = space.weights();
    const Matrix dw = d1 * w.asDiagonal();
    const double idem = (dw * d1 - d1).cwiseAbs().maxCoeff();
    row("dn_idempotent", "d_n", idem, idem <= 1e-12);
    // self-adjoint under <.,.>_mu iff W D W is symmetric
    const Matrix wd = w.asDiagonal() * d1 * w.asDiagonal();
    const double sym = (wd - wd.transpose()).cwiseAbs().maxCoeff();
    row("dn_self_adjoint", "d_n", sym, sym <= 1e-12);
  }

  out.summary = {{"study", "property_suite"}, {"all_pass", all_ok}};
  out.ok = all_ok;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// runner

int run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, int threads) {
  (void)threads;  // studies are single-threaded per process
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  MeasureSpace space = build_space(cfg.kind, cfg.density, cfg.atom_level, cfg.window);
  Kernel kernel = cfg.kernel;
  if (cfg.sampled_path)
    kernel = make_sampled(load_grid_csv(*cfg.sampled_path, space.atom_count()),
                          cfg.kernel.psd_claim);
  Filtration filt = build_filtration(space, cfg.filtration);
  const auto t1 = clock::now();

  StudyOutput out;
  if (cfg.study == "trace_study") out = study_trace(cfg, kernel, filt);
  else if (cfg.study == "spectrum") out = study_spectrum(cfg, kernel, space);
  else if (cfg.study == "doob_convergence") out = study_doob(cfg, filt);
  else if (cfg.study == "maximal_function") out = study_maximal(cfg, filt);
  else if (cfg.study == "sandwich_identity") out = study_sandwich(cfg, kernel, filt);
  else if (cfg.study == "truncation_study") out = study_truncation(cfg, kernel, filt);
  else if (cfg.study == "property_suite") out = study_properties(cfg);
  else throw ConfigError("unknown study '" + cfg.study + "'");
  const auto t2 = clock::now();

  fs::create_directories(out_dir);
  const fs::path csv_path = out_dir / (cfg.study + ".csv");
  const fs::path json_path = out_dir / (cfg.study + ".json");
  const fs::path manifest_path = out_dir / "manifest.json";

  std::ofstream(csv_path) << out.csv;
  out.summary["pass"] = out.ok;
  const std::string json_text = out.summary.dump(2) + "\n";
  std::ofstream(json_path) << json_text;

  json manifest;
  manifest["version"] = version_string();
  try {
    manifest["config"] = json::parse(cfg.config_echo);
  } catch (...) {
    manifest["config"] = cfg.config_echo;
  }
  const auto ms = [](auto a, auto b) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(b - a).count();
  };
  manifest["wall_clock_ms"] = {{"build", ms(t0, t1)}, {"study", ms(t1, t2)}};
  char digest[32];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(fnv1a64(out.csv)));
  manifest["outputs"] = {
      {csv_path.filename().string(),
       {{"bytes", out.csv.size()}, {"fnv1a64", digest}}},
      {json_path.filename().string(), {{"bytes", json_text.size()}}}};
  std::ofstream(manifest_path) << manifest.dump(2) << "\n";

  return out.ok ? 0 : 3;
}

}  // namespace martrace
