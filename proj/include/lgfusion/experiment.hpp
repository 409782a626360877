#ifndef LGFUSION_EXPERIMENT_HPP
#define LGFUSION_EXPERIMENT_HPP

// Monte Carlo comparison of fusion methods on SO(3): trial construction,
// (gamma, xi) sweeps, timing and result files.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lgfusion/bch_baseline.hpp"
#include "lgfusion/distributions.hpp"
#include "lgfusion/fusion.hpp"
#include "lgfusion/metrics.hpp"
#include "lgfusion/so3.hpp"

namespace lgf {

using Gaussian = ConcentratedGaussian<SO3>;
using TrialInputs = std::array<Gaussian, 2>;

/// %.17g
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Trials

/// Uniformly distributed rotation from a normalised Gaussian quaternion.
template <class Rng>
SO3::Element random_rotation(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double w = normal(rng);
  const double x = normal(rng);
  const double y = normal(rng);
  const double z = normal(rng);
  return Eigen::Quaterniond(w, x, y, z).normalized().toRotationMatrix();
}

inline SO3::Tangent trial_mean_1(double gamma) {
  return gamma / std::sqrt(3.0) * SO3::Tangent(1.0, 1.0, -1.0);
}

inline SO3::Tangent trial_mean_2(double gamma) {
  return gamma / std::sqrt(2.0) * SO3::Tangent(1.0, -1.0, 0.0);
}

/// Two inputs at exp(u1), exp(u2) with covariances
/// xi diag(1, .75, .5) and xi diag(.5, 1, .75), each conjugated by an
/// independent uniform rotation when `rotate` is set.
template <class Rng>
TrialInputs build_trial(double gamma, double xi, Rng& rng,
                        bool rotate = true) {
  if (!(gamma > 0.0) || !(xi > 0.0)) {
    throw std::invalid_argument("build_trial: gamma and xi must be positive");
  }
  const Eigen::Matrix3d s1 = xi * Eigen::Vector3d(1.0, 0.75, 0.5).asDiagonal();
  const Eigen::Matrix3d s2 = xi * Eigen::Vector3d(0.5, 1.0, 0.75).asDiagonal();
  auto rotated = [&](const Eigen::Matrix3d& s) -> Eigen::Matrix3d {
    if (!rotate) return s;
    const SO3::Element r = random_rotation(rng);
    const Eigen::Matrix3d c = r * s * r.transpose();
    return 0.5 * (c + c.transpose());
  };
  const Eigen::Matrix3d c1 = rotated(s1);
  const Eigen::Matrix3d c2 = rotated(s2);
  return {Gaussian(SO3::exp(trial_mean_1(gamma)), c1),
          Gaussian(SO3::exp(trial_mean_2(gamma)), c2)};
}

/// Generator for one (gamma, xi, trial) cell, independent of every other
/// cell and of execution order.
inline std::mt19937_64 trial_stream(std::uint64_t master_seed,
                                    std::size_t gamma_index,
                                    std::size_t xi_index,
                                    std::size_t trial_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(gamma_index),
                    static_cast<std::uint32_t>(xi_index),
                    static_cast<std::uint32_t>(trial_index)};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// Methods
//
// Identifier grammar: <base>[:<modifier>]...
//   base      naive | jac-full | jac-1 | jac-2 | pt | ptc | bch-1 | bch-2
//   modifier  ref-identity | ref-first | ref-naive | ref-iter<k>
//             | reset | no-reset            (scheme-based bases only)

struct Method {
  enum class Family { Naive, Scheme, Bch };

  std::string id;
  Family family = Family::Naive;
  FusionConfig fusion;
  BchOrder bch_order = BchOrder::First;
};

inline const std::vector<std::string>& standard_methods() {
  static const std::vector<std::string> ids = {
      "naive", "jac-full", "jac-1", "jac-2", "pt", "ptc", "bch-1", "bch-2"};
  return ids;
}

inline ReferenceStrategy parse_reference_strategy(std::string_view s) {
  if (s == "identity") return ReferenceStrategy::identity();
  if (s == "first") return ReferenceStrategy::first_input();
  if (s == "naive") return ReferenceStrategy::naive_fusion();
  if (s.starts_with("iter")) {
    const std::string digits(s.substr(4));
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == digits.size() && used > 0) {
      return ReferenceStrategy::iterated_naive(k);
    }
  }
  throw std::invalid_argument("unknown reference strategy '" + std::string(s) +
                              "'");
}

inline std::string to_string(const ReferenceStrategy& r) {
  switch (r.kind()) {
    case ReferenceStrategy::Kind::Identity:
      return "identity";
    case ReferenceStrategy::Kind::FirstInput:
      return "first";
    case ReferenceStrategy::Kind::NaiveFusion:
      return "naive";
    case ReferenceStrategy::Kind::IteratedNaive:
      return "iter" + std::to_string(r.iterations());
  }
  return "?";
}

/// `reference` and `reset` are the defaults for scheme-based methods;
/// modifiers in the identifier override them.
inline Method parse_method(std::string_view id,
                           ReferenceStrategy reference =
                               ReferenceStrategy::naive_fusion(),
                           bool reset = true) {
  Method m;
  m.id = std::string(id);
  std::vector<std::string> parts;
  {
    std::string token;
    std::istringstream in{std::string(id)};
    while (std::getline(in, token, ':')) parts.push_back(token);
  }
  if (parts.empty()) throw std::invalid_argument("empty method identifier");
  const std::string& base = parts.front();
  using Kind = JacobianScheme::Kind;
  static const std::map<std::string, JacobianScheme, std::less<>> schemes = {
      {"jac-full", Kind::Full},
      {"jac-1", Kind::Taylor1},
      {"jac-2", Kind::Taylor2},
      {"pt", Kind::ParallelTransport},
      {"ptc", Kind::ParallelTransportCurvature},
  };
  if (base == "naive") {
    m.family = Method::Family::Naive;
  } else if (base == "bch-1" || base == "bch-2") {
    m.family = Method::Family::Bch;
    m.bch_order = base == "bch-1" ? BchOrder::First : BchOrder::Second;
  } else if (auto it = schemes.find(base); it != schemes.end()) {
    m.family = Method::Family::Scheme;
    m.fusion.scheme = it->second;
    m.fusion.reference_strategy = reference;
    m.fusion.reset_enabled = reset;
  } else {
    throw std::invalid_argument("unknown method '" + base + "'");
  }
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const std::string& mod = parts[i];
    if (m.family != Method::Family::Scheme) {
      throw std::invalid_argument("method '" + base +
                                  "' does not take modifiers");
    }
    if (mod == "reset") {
      m.fusion.reset_enabled = true;
    } else if (mod == "no-reset") {
      m.fusion.reset_enabled = false;
    } else if (mod.starts_with("ref-")) {
      m.fusion.reference_strategy =
          parse_reference_strategy(std::string_view(mod).substr(4));
    } else {
      throw std::invalid_argument("unknown method modifier '" + mod + "'");
    }
  }
  return m;
}

/// Runs one method on one trial. BCH methods start from the naive posterior,
/// so their cost includes it.
inline Gaussian run_method(const Method& m, const TrialInputs& inputs,
                           const OptimizerSettings& settings = {}) {
  const std::span<const Gaussian> in(inputs);
  switch (m.family) {
    case Method::Family::Naive:
      return naive_fuse<SO3>(in);
    case Method::Family::Scheme:
      return fuse<SO3>(in, m.fusion);
    case Method::Family::Bch: {
      const SO3::Element x0 = naive_fuse<SO3>(in).reference();
      return bch_fuse<SO3>(in, m.bch_order, x0, settings);
    }
  }
  throw std::logic_error("run_method: unknown family");
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  std::vector<double> gamma_values;
  std::vector<double> xi_values;
  std::size_t trials = 50;
  std::vector<std::string> methods;
  ReferenceStrategy reference_strategy = ReferenceStrategy::naive_fusion();
  bool reset_enabled = true;
  IntegrationGrid grid;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_path = "out";
  int timing_repetitions = 5;
  int timing_batch = 16;
  bool rotate_covariances = true;

  static std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n == 0) throw std::invalid_argument("linspace: n must be >= 1");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
    }
    return v;
  }

  /// 5 x 5 grid over [0.1, 1.8]^2, 50 trials, all eight methods.
  static ExperimentConfig desk() {
    ExperimentConfig c;
    c.gamma_values = linspace(0.1, 1.8, 5);
    c.xi_values = linspace(0.1, 1.8, 5);
    c.methods = standard_methods();
    return c;
  }

  /// 18 x 18 grid, 500 trials. Takes hours.
  static ExperimentConfig full() {
    ExperimentConfig c = desk();
    c.gamma_values = linspace(0.1, 1.8, 18);
    c.xi_values = linspace(0.1, 1.8, 18);
    c.trials = 500;
    return c;
  }

  /// Desk grid, full Jacobian with each reference strategy.
  static ExperimentConfig initial_guess() {
    ExperimentConfig c = desk();
    c.methods = {"naive", "jac-full:ref-identity", "jac-full:ref-first",
                 "jac-full:ref-naive", "jac-full:ref-iter3"};
    return c;
  }

  /// Desk grid, full Jacobian with and without the reset step.
  static ExperimentConfig reset_ablation() {
    ExperimentConfig c = desk();
    c.methods = {"jac-full", "jac-full:no-reset"};
    return c;
  }

  void validate() const {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (methods.empty()) throw std::invalid_argument("methods is empty");
    if (gamma_values.empty() || xi_values.empty()) {
      throw std::invalid_argument("gamma/xi grids must be non-empty");
    }
    for (double v : gamma_values) {
      if (!(v > 0.0)) throw std::invalid_argument("gamma values must be > 0");
    }
    for (double v : xi_values) {
      if (!(v > 0.0)) throw std::invalid_argument("xi values must be > 0");
    }
    if (timing_repetitions < 1 || timing_batch < 1) {
      throw std::invalid_argument("timing repetitions/batch must be >= 1");
    }
    grid.validate();
    for (const auto& id : methods) parse_method(id);
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in{std::string(s)};
  while (std::getline(in, token, sep)) {
    token = trim(token);
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

inline double parse_real(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& s) {
  if (s.empty() || s.front() == '-') {
    throw std::invalid_argument("bad unsigned integer '" + s + "'");
  }
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size()) {
    throw std::invalid_argument("bad unsigned integer '" + s + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
  if (s == "off" || s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("bad boolean '" + s + "'");
}

/// "a:b:n" -> linspace(a, b, n); otherwise a comma-separated list.
inline std::vector<double> parse_grid(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() == 3) {
    return ExperimentConfig::linspace(parse_real(parts[0]),
                                      parse_real(parts[1]),
                                      parse_unsigned(parts[2]));
  }
  std::vector<double> v;
  for (const auto& p : split(s, ',')) v.push_back(parse_real(p));
  if (v.empty()) throw std::invalid_argument("empty grid '" + s + "'");
  return v;
}

}  // namespace detail

/// Sets one ExperimentConfig field from its textual key/value form. Keys are
/// the CLI flag names without dashes; '_' and '-' are interchangeable.
inline void apply_config_key(ExperimentConfig& c, std::string key,
                             const std::string& value) {
  std::replace(key.begin(), key.end(), '_', '-');
  using detail::parse_bool;
  using detail::parse_real;
  using detail::parse_unsigned;
  if (key == "gamma-grid" || key == "gamma-values") {
    c.gamma_values = detail::parse_grid(value);
  } else if (key == "xi-grid" || key == "xi-values") {
    c.xi_values = detail::parse_grid(value);
  } else if (key == "trials") {
    c.trials = parse_unsigned(value);
  } else if (key == "methods") {
    c.methods = detail::split(value, ',');
  } else if (key == "reference-strategy") {
    c.reference_strategy = parse_reference_strategy(value);
  } else if (key == "reset") {
    c.reset_enabled = parse_bool(value);
  } else if (key == "no-reset") {
    c.reset_enabled = !parse_bool(value);
  } else if (key == "seed") {
    c.master_seed = parse_unsigned(value);
  } else if (key == "out") {
    c.output_path = value;
  } else if (key == "metric-samples") {
    c.grid.samples = parse_unsigned(value);
  } else if (key == "metric-bound") {
    c.grid.bound = parse_real(value);
  } else if (key == "metric-lattice") {
    const auto n = parse_unsigned(value);
    c.grid.mode = LatticeSampling{static_cast<int>(n)};
    c.grid.samples = n * n * n;
  } else if (key == "haar-correction") {
    c.grid.haar_correction = parse_bool(value);
  } else if (key == "timing-repetitions") {
    c.timing_repetitions = static_cast<int>(parse_unsigned(value));
  } else if (key == "timing-batch") {
    c.timing_batch = static_cast<int>(parse_unsigned(value));
  } else if (key == "rotate-covariances") {
    c.rotate_covariances = parse_bool(value);
  } else {
    throw std::invalid_argument("unknown configuration key '" + key + "'");
  }
}

/// Flat "key = value" text, '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path.string());
  }
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" +
                                  std::to_string(line_no) +
                                  ": expected key = value");
    }
    out.emplace_back(detail::trim(t.substr(0, eq)),
                     detail::trim(t.substr(eq + 1)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

struct TrialResult {
  double gamma = 0.0;
  double xi = 0.0;
  std::size_t gamma_index = 0;
  std::size_t xi_index = 0;
  std::size_t trial_index = 0;
  std::string method;
  double error = std::numeric_limits<double>::quiet_NaN();
  double wall_time_ns = std::numeric_limits<double>::quiet_NaN();
  double time_ratio = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

struct MethodSummary {
  std::string method;
  double mean_error = std::numeric_limits<double>::quiet_NaN();
  double mean_time_ratio = std::numeric_limits<double>::quiet_NaN();
  std::size_t trials_ok = 0;
  std::size_t trials_failed = 0;
  /// [gamma_index][xi_index] mean error over converged trials.
  std::vector<std::vector<double>> heatmap;
};

struct SweepResult {
  std::vector<TrialResult> rows;
  std::vector<MethodSummary> summaries;

  const MethodSummary& summary(std::string_view method) const {
    for (const auto& s : summaries) {
      if (s.method == method) return s;
    }
    throw std::out_of_range("no summary for method '" + std::string(method) +
                            "'");
  }
};

namespace detail {

/// Median over `repetitions` of the mean per-call time of `batch` calls.
template <class F>
double median_call_time_ns(F&& call, int repetitions, int batch) {
  std::vector<double> samples;
  samples.reserve(repetitions);
  for (int r = 0; r < repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int b = 0; b < batch; ++b) call();
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(
        static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
                .count()) /
        batch);
  }
  std::nth_element(samples.begin(), samples.begin() + repetitions / 2,
                   samples.end());
  return samples[repetitions / 2];
}

}  // namespace detail

/// Runs every (gamma, xi, trial, method) cell. Rows come out ordered by
/// (gamma index, xi index, trial, method order). Per-trial numerical
/// failures are recorded with converged = false and excluded from means.
inline SweepResult run_sweep_in_memory(const ExperimentConfig& config) {
  config.validate();
  std::vector<Method> methods;
  for (const auto& id : config.methods) {
    methods.push_back(
        parse_method(id, config.reference_strategy, config.reset_enabled));
  }
  const Method naive = parse_method("naive");

  SweepResult out;
  out.rows.reserve(config.gamma_values.size() * config.xi_values.size() *
                   config.trials * methods.size());
  for (std::size_t gi = 0; gi < config.gamma_values.size(); ++gi) {
    for (std::size_t xi_i = 0; xi_i < config.xi_values.size(); ++xi_i) {
      const double gamma = config.gamma_values[gi];
      const double xi = config.xi_values[xi_i];
      for (std::size_t t = 0; t < config.trials; ++t) {
        std::mt19937_64 rng =
            trial_stream(config.master_seed, gi, xi_i, t);
        const TrialInputs inputs =
            build_trial(gamma, xi, rng, config.rotate_covariances);
        IntegrationGrid grid = config.grid;
        if (std::holds_alternative<UniformRandomSampling>(grid.mode)) {
          grid.mode = UniformRandomSampling{rng()};
        }
        const FusionErrorEvaluator evaluator(inputs[0], inputs[1], grid);
        const double naive_ns = detail::median_call_time_ns(
            [&] { return run_method(naive, inputs); },
            config.timing_repetitions, config.timing_batch);

        for (const auto& m : methods) {
          TrialResult row;
          row.gamma = gamma;
          row.xi = xi;
          row.gamma_index = gi;
          row.xi_index = xi_i;
          row.trial_index = t;
          row.method = m.id;
          try {
            const Gaussian posterior = run_method(m, inputs);
            row.error = evaluator.evaluate(posterior).error;
            row.wall_time_ns =
                m.family == Method::Family::Naive
                    ? naive_ns
                    : detail::median_call_time_ns(
                          [&] { return run_method(m, inputs); },
                          config.timing_repetitions, config.timing_batch);
            row.time_ratio = m.family == Method::Family::Naive
                                 ? 1.0
                                 : timing_ratio(row.wall_time_ns, naive_ns);
            row.converged = true;
          } catch (const DomainError&) {
          } catch (const SingularityError&) {
          } catch (const ConvergenceError&) {
          } catch (const std::invalid_argument&) {
          }
          out.rows.push_back(std::move(row));
        }
      }
    }
  }

  for (const auto& m : methods) {
    MethodSummary s;
    s.method = m.id;
    std::vector<std::vector<double>> sum(
        config.gamma_values.size(),
        std::vector<double>(config.xi_values.size(), 0.0));
    auto count = std::vector<std::vector<std::size_t>>(
        config.gamma_values.size(),
        std::vector<std::size_t>(config.xi_values.size(), 0));
    double err = 0.0;
    double ratio = 0.0;
    for (const auto& r : out.rows) {
      if (r.method != m.id) continue;
      if (!r.converged) {
        ++s.trials_failed;
        continue;
      }
      ++s.trials_ok;
      err += r.error;
      ratio += r.time_ratio;
      sum[r.gamma_index][r.xi_index] += r.error;
      ++count[r.gamma_index][r.xi_index];
    }
    if (s.trials_ok > 0) {
      s.mean_error = err / s.trials_ok;
      s.mean_time_ratio = ratio / s.trials_ok;
    }
    s.heatmap = sum;
    for (std::size_t i = 0; i < sum.size(); ++i) {
      for (std::size_t j = 0; j < sum[i].size(); ++j) {
        s.heatmap[i][j] = count[i][j] > 0
                              ? sum[i][j] / count[i][j]
                              : std::numeric_limits<double>::quiet_NaN();
      }
    }
    out.summaries.push_back(std::move(s));
  }
  return out;
}

/// method id -> file-name-safe form
inline std::string method_file_tag(std::string id) {
  std::replace(id.begin(), id.end(), ':', '_');
  return id;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

inline void write_heatmap(const std::filesystem::path& path,
                          const ExperimentConfig& config,
                          const std::vector<std::vector<double>>& cells) {
  std::ofstream f = open_output(path);
  f << "gamma\\xi";
  for (double xi : config.xi_values) f << ',' << format_real(xi);
  f << '\n';
  for (std::size_t i = 0; i < config.gamma_values.size(); ++i) {
    f << format_real(config.gamma_values[i]);
    for (double v : cells[i]) f << ',' << format_real(v);
    f << '\n';
  }
  if (!f) throw std::runtime_error("error writing " + path.string());
}

}  // namespace detail

/// Pairs (m, m:no-reset) present in the method list, in list order.
inline std::vector<std::pair<std::string, std::string>> reset_ablation_pairs(
    const std::vector<std::string>& methods) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& id : methods) {
    const std::string no_reset = id + ":no-reset";
    if (std::find(methods.begin(), methods.end(), no_reset) != methods.end()) {
      pairs.emplace_back(id, no_reset);
    }
  }
  return pairs;
}

/// Writes results.csv, timings.csv, summary.json, heatmap_<method>.csv and,
/// when the method list holds an (m, m:no-reset) pair, delta_e.csv
/// (E_no-reset - E_reset per cell, for the first pair).
inline void write_sweep_outputs(const ExperimentConfig& config,
                                const SweepResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir = config.output_path;
  fs::create_directories(dir);

  {
    std::ofstream f = detail::open_output(dir / "results.csv");
    f << "gamma,xi,trial,method,error,converged\n";
    for (const auto& r : result.rows) {
      f << format_real(r.gamma) << ',' << format_real(r.xi) << ','
        << r.trial_index << ',' << r.method << ',' << format_real(r.error)
        << ',' << (r.converged ? "true" : "false") << '\n';
    }
    if (!f) throw std::runtime_error("error writing results.csv");
  }
  {
    std::ofstream f = detail::open_output(dir / "timings.csv");
    f << "gamma,xi,trial,method,wall_time_ns,time_ratio\n";
    for (const auto& r : result.rows) {
      f << format_real(r.gamma) << ',' << format_real(r.xi) << ','
        << r.trial_index << ',' << r.method << ','
        << format_real(r.wall_time_ns) << ',' << format_real(r.time_ratio)
        << '\n';
    }
    if (!f) throw std::runtime_error("error writing timings.csv");
  }
  for (const auto& s : result.summaries) {
    detail::write_heatmap(dir / ("heatmap_" + method_file_tag(s.method) + ".csv"),
                          config, s.heatmap);
  }
  const auto pairs = reset_ablation_pairs(config.methods);
  if (!pairs.empty()) {
    const auto& with = result.summary(pairs.front().first).heatmap;
    const auto& without = result.summary(pairs.front().second).heatmap;
    std::vector<std::vector<double>> delta = with;
    for (std::size_t i = 0; i < delta.size(); ++i) {
      for (std::size_t j = 0; j < delta[i].size(); ++j) {
        delta[i][j] = without[i][j] - with[i][j];
      }
    }
    detail::write_heatmap(dir / "delta_e.csv", config, delta);
  }

  nlohmann::json j;
  j["gamma_values"] = config.gamma_values;
  j["xi_values"] = config.xi_values;
  j["trials"] = config.trials;
  j["master_seed"] = config.master_seed;
  j["reference_strategy"] = to_string(config.reference_strategy);
  j["reset_enabled"] = config.reset_enabled;
  j["metric"] = {
      {"bound", config.grid.bound},
      {"samples", config.grid.samples},
      {"mode", std::holds_alternative<LatticeSampling>(config.grid.mode)
                   ? "lattice"
                   : "uniform_random"},
      {"haar_correction", config.grid.haar_correction},
  };
  j["timing"] = {{"repetitions", config.timing_repetitions},
                 {"batch", config.timing_batch}};
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& s : result.summaries) {
    methods.push_back({{"method", s.method},
                       {"mean_error", s.mean_error},
                       {"mean_time_ratio", s.mean_time_ratio},
                       {"trials_ok", s.trials_ok},
                       {"trials_failed", s.trials_failed}});
  }
  j["methods"] = methods;
  const auto has = [&](std::string_view id) {
    return std::any_of(result.summaries.begin(), result.summaries.end(),
                       [&](const MethodSummary& s) { return s.method == id; });
  };
  if (has("bch-2") && has("ptc")) {
    j["bch2_over_ptc_time_ratio"] = result.summary("bch-2").mean_time_ratio /
                                    result.summary("ptc").mean_time_ratio;
  }
  std::ofstream f = detail::open_output(dir / "summary.json");
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("error writing summary.json");
}

inline SweepResult run_sweep(const ExperimentConfig& config) {
  SweepResult result = run_sweep_in_memory(config);
  write_sweep_outputs(config, result);
  return result;
}

}  // namespace lgf

#endif  // LGFUSION_EXPERIMENT_HPP
