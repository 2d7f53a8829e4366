#include <gtest/gtest.h>

#include <cmath>
#include <regex>
#include <set>
#include <string>

#include "runner.hpp"

using namespace elab;
using namespace elab::cli;

namespace {
const std::filesystem::path kConfigs = ESTIMATE_LAB_CONFIG_DIR;

json config(const std::string& name) { return load_config(kConfigs / (name + ".json")); }

// keys a report may carry; patterned keys are matched separately
const std::set<std::string>& schema() {
  static const std::set<std::string> s{
      "scenario", "partition", "refinement_levels", "checks", "pass", "exit_status",
      // scenario
      "label", "provenance", "domain", "n", "R", "k", "h", "t0", "T", "dt", "nonlinearity", "a", "H", "M", "floor",
      "residual", "rho", "delta",
      // check names
      "hypotheses", "lemma21", "theorem", "corollary", "regimes", "appendixA", "appendixB", "liouville", "cutoffs",
      "regime_inner", "regime_late", "regime_data", "regime_interior", "regime_combination", "regime_recomposition",
      // common report fields
      "premise_ok", "worst_margin", "violations", "C_emp", "tol", "nodes_checked", "nodes_skipped", "notes",
      // hypotheses
      "kappa_min", "eta_min", "Gamma_max", "Xi_min", "samples",
      // refinement
      "levels", "tol_A", "tol_B", "worst_violation", "cauchy", "convergence_order", "violation_order", "C_emp_levels",
      "C_emp_ratio",
      // estimator scalars
      "C_cal", "C_scalar", "T_scalar", "S_scalar", "T_scalar_error", "S_scalar_error", "tau_u", "sigma_u", "beta1",
      "beta2", "beta3", "iota", "mu", "gamma", "kappa", "bracket", "sharper_bracket", "sharper_C_emp",
      "sharper_fraction",
      // rescaling and gradient source
      "time_dilation", "rescaled_residual", "rescaled_residual_allowed", "rescaling_deviation", "s0_limit_C_emp",
      "epsilon", "q", "m", "F_sup", "H_sup",
      // decay
      "sup_u", "decay_slope",
      // cutoffs
      "theta", "exponent", "spatial_C", "temporal_C", "c2", "monotone", "offset", "slope"};
  return s;
}

bool known_key(const std::string& k) {
  static const std::regex patterned(R"(R_\d+_(scaled|gradient)_sup|s0_\d+_C_emp|theta_[0-9.]+)");
  return schema().count(k) > 0 || std::regex_match(k, patterned);
}

void collect_unknown(const json& j, std::vector<std::string>& bad) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (!known_key(k)) bad.push_back(k);
      collect_unknown(v, bad);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_unknown(v, bad);
  }
}
}  // namespace

TEST(Runner, ConstantScenarioPassesWithZeroConstant) {
  const auto res = run_config(config("constant"));
  EXPECT_EQ(res.status, kExitPass);
  EXPECT_EQ(res.report["checks"]["theorem"]["C_emp"].get<double>(), 0.0);
}

TEST(Runner, CosineRefinementReportsConvergenceOrder) {
  const auto res = run_config(config("cosine_refinement"));
  EXPECT_EQ(res.status, kExitPass);
  EXPECT_GE(res.report["checks"]["lemma21"]["convergence_order"].get<double>(), 1.5);
}

TEST(Runner, BadPowerIsConfigError) { EXPECT_THROW(run_config(config("bad_power")), ConfigError); }

TEST(Runner, UnknownCheckIsConfigError) {
  auto cfg = config("constant");
  cfg["checks"] = json::array({"theorem", "nonsense"});
  EXPECT_THROW(run_config(cfg), ConfigError);
}

TEST(Runner, MalformedJsonIsConfigError) { EXPECT_THROW(parse_config_text("{\"checks\": [}"), ConfigError); }

TEST(Runner, EveryReportKeyIsInSchema) {
  for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
    const std::string name = entry.path().stem().string();
    if (name == "bad_power") continue;
    const auto res = run_config(load_config(entry.path()));
    std::vector<std::string> bad;
    collect_unknown(res.report, bad);
    EXPECT_TRUE(bad.empty()) << name << ": unknown key " << (bad.empty() ? "" : bad.front());
  }
}

TEST(Runner, ReportTextIsDeterministic) {
  const auto cfg = config("gaussian_floor");
  EXPECT_EQ(to_text(run_config(cfg).report), to_text(run_config(cfg).report));
}

TEST(Runner, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(kInf), "\"inf\"");  // quoted so the report stays valid JSON
}

TEST(Runner, SweepAggregatesEveryValue) {
  const auto res = run_sweep(config("gaussian_floor"), "delta", {0.25, 0.5});
  EXPECT_NE(res.csv.find("delta,0.25,theorem"), std::string::npos);
  EXPECT_NE(res.csv.find("delta,0.5,theorem"), std::string::npos);
  EXPECT_THROW(run_sweep(config("gaussian_floor"), "bogus", {1.0}), ConfigError);
}
