#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "test_util.hpp"

using lgf::SO3;
using lgf::test::max_abs;
using V = Eigen::Vector3d;
using M = Eigen::Matrix3d;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(f, l);) out.push_back(l);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lgfusion_test_" + name);
  fs::remove_all(p);
  return p;
}

lgf::ExperimentConfig small_config(const fs::path& out) {
  lgf::ExperimentConfig c = lgf::ExperimentConfig::desk();
  c.gamma_values = {0.5, 1.0};
  c.xi_values = {0.3, 0.8, 1.2};
  c.trials = 2;
  c.grid.samples = 5000;
  c.timing_repetitions = 1;
  c.timing_batch = 1;
  c.output_path = out;
  return c;
}

}  // namespace

// --------------------------------------------------------------- build_trial

TEST(BuildTrial, UnrotatedExample) {
  std::mt19937_64 rng(80);
  const auto in = lgf::build_trial(1.0, 1.0, rng, false);
  EXPECT_LE((SO3::log(in[0].reference()) - V(0.57735026918962573, 0.57735026918962573,
                                              -0.57735026918962573)).norm(), 1e-15);
  EXPECT_LE((SO3::log(in[1].reference()) - V(0.70710678118654757, -0.70710678118654757, 0))
                .norm(), 1e-15);
  EXPECT_EQ(in[0].covariance(), M(V(1.0, 0.75, 0.5).asDiagonal()));
  EXPECT_EQ(in[1].covariance(), M(V(0.5, 1.0, 0.75).asDiagonal()));
}

TEST(BuildTrial, RotationKeepsEigenvalues) {
  std::mt19937_64 rng(81);
  for (int i = 0; i < 20; ++i) {
    const auto in = lgf::build_trial(0.7, 0.4, rng);
    const V e1 = Eigen::SelfAdjointEigenSolver<M>(in[0].covariance()).eigenvalues();
    const V e2 = Eigen::SelfAdjointEigenSolver<M>(in[1].covariance()).eigenvalues();
    EXPECT_LE((e1 - 0.4 * V(0.5, 0.75, 1.0)).norm(), 1e-14);
    EXPECT_LE((e2 - 0.4 * V(0.5, 0.75, 1.0)).norm(), 1e-14);
    EXPECT_LE(max_abs(in[0].covariance() - in[0].covariance().transpose()), 0.0);
  }
}

TEST(BuildTrial, RejectsNonPositiveParameters) {
  std::mt19937_64 rng(82);
  EXPECT_THROW(lgf::build_trial(0.0, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(lgf::build_trial(1.0, -1.0, rng), std::invalid_argument);
}

TEST(TrialStream, IndependentOfOrder) {
  auto a = lgf::trial_stream(5, 1, 2, 3);
  auto b = lgf::trial_stream(5, 1, 2, 3);
  auto c = lgf::trial_stream(5, 1, 2, 4);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(lgf::trial_stream(5, 2, 1, 3)(), lgf::trial_stream(5, 1, 2, 3)());
}

// -------------------------------------------------------------- formatting

TEST(FormatReal, SeventeenSignificantDigits) {
  EXPECT_EQ(lgf::format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(lgf::format_real(1.0), "1");
  EXPECT_EQ(lgf::format_real(std::nan("")), "nan");
  const double v = 0.123456789012345678;
  EXPECT_EQ(std::stod(lgf::format_real(v)), v);
}

// ------------------------------------------------------------------ methods

TEST(ParseMethod, StandardIdentifiers) {
  using Kind = lgf::JacobianScheme::Kind;
  EXPECT_EQ(lgf::parse_method("naive").family, lgf::Method::Family::Naive);
  EXPECT_EQ(lgf::parse_method("jac-full").fusion.scheme, lgf::JacobianScheme(Kind::Full));
  EXPECT_EQ(lgf::parse_method("jac-1").fusion.scheme, lgf::JacobianScheme(Kind::Taylor1));
  EXPECT_EQ(lgf::parse_method("jac-2").fusion.scheme, lgf::JacobianScheme(Kind::Taylor2));
  EXPECT_EQ(lgf::parse_method("pt").fusion.scheme,
            lgf::JacobianScheme(Kind::ParallelTransport));
  EXPECT_EQ(lgf::parse_method("ptc").fusion.scheme,
            lgf::JacobianScheme(Kind::ParallelTransportCurvature));
  EXPECT_EQ(lgf::parse_method("bch-1").bch_order, lgf::BchOrder::First);
  EXPECT_EQ(lgf::parse_method("bch-2").bch_order, lgf::BchOrder::Second);
  for (const auto& id : lgf::standard_methods()) EXPECT_NO_THROW(lgf::parse_method(id));
}

TEST(ParseMethod, Modifiers) {
  const auto m = lgf::parse_method("jac-full:ref-iter3:no-reset");
  EXPECT_EQ(m.fusion.reference_strategy.kind(), lgf::ReferenceStrategy::Kind::IteratedNaive);
  EXPECT_EQ(m.fusion.reference_strategy.iterations(), 3);
  EXPECT_FALSE(m.fusion.reset_enabled);
  EXPECT_EQ(lgf::parse_method("pt:ref-identity").fusion.reference_strategy.kind(),
            lgf::ReferenceStrategy::Kind::Identity);
  EXPECT_FALSE(lgf::parse_method("ptc", lgf::ReferenceStrategy::first_input(), false)
                   .fusion.reset_enabled);
  EXPECT_TRUE(lgf::parse_method("ptc:reset", lgf::ReferenceStrategy::first_input(), false)
                  .fusion.reset_enabled);
}

TEST(ParseMethod, Rejects) {
  EXPECT_THROW(lgf::parse_method("jac-3"), std::invalid_argument);
  EXPECT_THROW(lgf::parse_method(""), std::invalid_argument);
  EXPECT_THROW(lgf::parse_method("bch-2:no-reset"), std::invalid_argument);
  EXPECT_THROW(lgf::parse_method("jac-full:ref-iter0"), std::invalid_argument);
  EXPECT_THROW(lgf::parse_method("jac-full:ref-iterx"), std::invalid_argument);
  EXPECT_THROW(lgf::parse_method("jac-full:fast"), std::invalid_argument);
}

// ------------------------------------------------------------------- config

TEST(Config, Keys) {
  lgf::ExperimentConfig c = lgf::ExperimentConfig::desk();
  lgf::apply_config_key(c, "gamma-grid", "0.2:1.0:3");
  EXPECT_EQ(c.gamma_values, lgf::ExperimentConfig::linspace(0.2, 1.0, 3));
  lgf::apply_config_key(c, "xi_grid", "0.1, 0.4");
  EXPECT_EQ(c.xi_values, (std::vector<double>{0.1, 0.4}));
  lgf::apply_config_key(c, "trials", "7");
  EXPECT_EQ(c.trials, 7u);
  lgf::apply_config_key(c, "methods", "naive, ptc");
  EXPECT_EQ(c.methods, (std::vector<std::string>{"naive", "ptc"}));
  lgf::apply_config_key(c, "seed", "123");
  EXPECT_EQ(c.master_seed, 123u);
  lgf::apply_config_key(c, "metric-samples", "4000");
  EXPECT_EQ(c.grid.samples, 4000u);
  lgf::apply_config_key(c, "haar-correction", "off");
  EXPECT_FALSE(c.grid.haar_correction);
  lgf::apply_config_key(c, "no-reset", "true");
  EXPECT_FALSE(c.reset_enabled);
  lgf::apply_config_key(c, "reference-strategy", "iter2");
  EXPECT_EQ(c.reference_strategy.iterations(), 2);
  lgf::apply_config_key(c, "out", "somewhere");
  EXPECT_EQ(c.output_path, fs::path("somewhere"));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, Rejects) {
  lgf::ExperimentConfig c = lgf::ExperimentConfig::desk();
  EXPECT_THROW(lgf::apply_config_key(c, "colour", "red"), std::invalid_argument);
  EXPECT_THROW(lgf::apply_config_key(c, "trials", "-3"), std::invalid_argument);
  EXPECT_THROW(lgf::apply_config_key(c, "trials", "3x"), std::invalid_argument);
  EXPECT_THROW(lgf::apply_config_key(c, "haar-correction", "maybe"), std::invalid_argument);
  auto bad = c;
  bad.trials = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.gamma_values = {0.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.grid.samples = 10;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.methods = {"naive", "nope"};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Config, Presets) {
  const auto d = lgf::ExperimentConfig::desk();
  EXPECT_EQ(d.gamma_values.size(), 5u);
  EXPECT_DOUBLE_EQ(d.gamma_values[1], 0.525);
  EXPECT_EQ(d.trials, 50u);
  EXPECT_EQ(d.grid.samples, 200000u);
  EXPECT_EQ(d.methods.size(), 8u);
  const auto f = lgf::ExperimentConfig::full();
  EXPECT_EQ(f.xi_values.size(), 18u);
  EXPECT_EQ(f.trials, 500u);
}

TEST(Config, File) {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "c.cfg");
    f << "# comment\n\ntrials = 4   # inline\nmethods = naive,jac-full\n";
  }
  const auto kv = lgf::read_config_file(dir / "c.cfg");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"trials", "4"}));
  EXPECT_EQ(kv[1].second, "naive,jac-full");
  {
    std::ofstream f(dir / "bad.cfg");
    f << "trials 4\n";
  }
  EXPECT_THROW(lgf::read_config_file(dir / "bad.cfg"), std::invalid_argument);
  EXPECT_THROW(lgf::read_config_file(dir / "missing.cfg"), std::runtime_error);
}

// -------------------------------------------------------------------- sweep

TEST(Sweep, SingleNaiveCell) {
  lgf::ExperimentConfig c = small_config(scratch("single"));
  c.gamma_values = {1.0};
  c.xi_values = {1.0};
  c.trials = 1;
  c.methods = {"naive"};
  const auto r = lgf::run_sweep(c);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].time_ratio, 1.0);
  EXPECT_TRUE(r.rows[0].converged);
  const auto t = lines(c.output_path / "timings.csv");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_TRUE(t[1].ends_with(",1"));
}

TEST(Sweep, OutputFiles) {
  lgf::ExperimentConfig c = small_config(scratch("outputs"));
  c.methods = {"naive", "ptc", "bch-2", "jac-full", "jac-full:no-reset"};
  const auto r = lgf::run_sweep(c);
  EXPECT_EQ(r.rows.size(), 2u * 3u * 2u * 5u);

  const auto res = lines(c.output_path / "results.csv");
  EXPECT_EQ(res.front(), "gamma,xi,trial,method,error,converged");
  EXPECT_EQ(res.size(), r.rows.size() + 1);
  const auto tim = lines(c.output_path / "timings.csv");
  EXPECT_EQ(tim.front(), "gamma,xi,trial,method,wall_time_ns,time_ratio");
  EXPECT_EQ(tim.size(), r.rows.size() + 1);
  for (const auto& row : r.rows) {
    EXPECT_GE(row.error, 0.0);
    if (row.method != "naive") EXPECT_GE(row.time_ratio, 1.0);
  }

  for (const auto& m : c.methods) {
    const auto h = lines(c.output_path / ("heatmap_" + lgf::method_file_tag(m) + ".csv"));
    ASSERT_EQ(h.size(), 3u) << m;
    EXPECT_EQ(std::count(h[0].begin(), h[0].end(), ','), 3);
    EXPECT_EQ(std::count(h[1].begin(), h[1].end(), ','), 3);
  }
  const auto d = lines(c.output_path / "delta_e.csv");
  ASSERT_EQ(d.size(), 3u);
  const double with = r.summary("jac-full").heatmap[1][2];
  const double without = r.summary("jac-full:no-reset").heatmap[1][2];
  EXPECT_EQ(d[2].substr(d[2].rfind(',') + 1), lgf::format_real(without - with));

  const auto j = nlohmann::json::parse(slurp(c.output_path / "summary.json"));
  for (const char* k : {"gamma_values", "xi_values", "trials", "master_seed", "metric",
                        "timing", "methods", "bch2_over_ptc_time_ratio"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  ASSERT_EQ(j["methods"].size(), 5u);
  EXPECT_EQ(j["methods"][1]["method"], "ptc");
  EXPECT_DOUBLE_EQ(j["methods"][1]["mean_error"].get<double>(),
                   r.summary("ptc").mean_error);
}

TEST(Sweep, NoDeltaWithoutAblationPair) {
  lgf::ExperimentConfig c = small_config(scratch("nodelta"));
  c.methods = {"naive", "jac-1"};
  lgf::run_sweep(c);
  EXPECT_FALSE(fs::exists(c.output_path / "delta_e.csv"));
  EXPECT_TRUE(fs::exists(c.output_path / "heatmap_jac-1.csv"));
}

TEST(Sweep, ResultsAreByteIdentical) {
  lgf::ExperimentConfig a = small_config(scratch("det_a"));
  lgf::ExperimentConfig b = small_config(scratch("det_b"));
  a.methods = b.methods = lgf::standard_methods();
  lgf::run_sweep(a);
  lgf::run_sweep(b);
  const std::string ra = slurp(a.output_path / "results.csv");
  EXPECT_FALSE(ra.empty());
  EXPECT_EQ(ra, slurp(b.output_path / "results.csv"));
  EXPECT_EQ(slurp(a.output_path / "heatmap_ptc.csv"), slurp(b.output_path / "heatmap_ptc.csv"));
}

TEST(Sweep, CellsReproducibleInIsolation) {
  lgf::ExperimentConfig whole = small_config(scratch("iso"));
  whole.methods = {"jac-2"};
  const auto all = lgf::run_sweep_in_memory(whole);
  // Re-running one trial directly reproduces its row.
  const auto& row = all.rows[3];
  auto rng = lgf::trial_stream(whole.master_seed, row.gamma_index, row.xi_index, row.trial_index);
  const auto in = lgf::build_trial(row.gamma, row.xi, rng);
  auto grid = whole.grid;
  grid.mode = lgf::UniformRandomSampling{rng()};
  const auto post = lgf::run_method(lgf::parse_method("jac-2"), in);
  EXPECT_EQ(lgf::fusion_error(in[0], in[1], post, grid).error, row.error);
}

TEST(Sweep, ErrorGrowsWithSeparation) {
  // Every method at xi = 1: mean E non-decreasing in gamma, one inversion allowed.
  lgf::ExperimentConfig c = small_config(scratch("mono"));
  c.gamma_values = lgf::ExperimentConfig::linspace(0.1, 1.8, 5);
  c.xi_values = {1.0};
  c.trials = 20;
  c.grid.samples = 20000;
  const auto r = lgf::run_sweep_in_memory(c);
  for (const auto& s : r.summaries) {
    int inversions = 0;
    std::ostringstream trace;
    for (std::size_t i = 0; i < s.heatmap.size(); ++i) {
      trace << s.heatmap[i][0] << ' ';
      if (i > 0 && s.heatmap[i][0] < s.heatmap[i - 1][0]) ++inversions;
    }
    EXPECT_LE(inversions, 1) << s.method << ": " << trace.str();
  }
}
