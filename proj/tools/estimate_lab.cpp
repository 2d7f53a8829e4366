// Command-line front end: run, sweep, hypotheses.

#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "runner.hpp"

namespace fs = std::filesystem;
using namespace elab;
using namespace elab::cli;

namespace {

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("cannot parse sweep value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--values needs at least one number");
  return out;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const HypothesisViolation& e) {
    std::cerr << "hypothesis violation: " << e.what() << "\n";
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
  } catch (const RangeError& e) {
    std::cerr << "range error: " << e.what() << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Check pointwise bounds on |grad u|/u for sampled diffusion solutions"};
  app.require_subcommand(1);

  std::string config, out_dir, param, values;

  auto* run = app.add_subcommand("run", "Run the checks listed in a config");
  run->add_option("config", config, "JSON config")->required();
  run->add_option("-o,--out", out_dir, "Output directory (overrides output.dir)");

  auto* sweep = app.add_subcommand("sweep", "Repeat a run over values of one parameter");
  sweep->add_option("config", config, "JSON config")->required();
  sweep->add_option("--param", param, "R, T, rho, delta, epsilon, p, k or h")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("-o,--out", out_dir, "Output directory (overrides output.dir)");

  auto* hyp = app.add_subcommand("hypotheses", "Check the structural hypotheses on F only");
  hyp->add_option("config", config, "JSON config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  if (*run) {
    return guarded([&] {
      const json cfg = load_config(config);
      const RunResult res = run_config(cfg);
      const fs::path dir = out_dir.empty() ? output_dir(cfg, "out") : fs::path(out_dir);
      write_outputs(cfg, res, dir);
      std::cout << (res.status == kExitPass ? "PASS" : "FAIL") << "  report: " << (dir / "report.json").string()
                << "\n";
      return res.status;
    });
  }
  if (*sweep) {
    return guarded([&] {
      const json cfg = load_config(config);
      const SweepResult res = run_sweep(cfg, param, parse_values(values));
      const fs::path dir = out_dir.empty() ? output_dir(cfg, "out") : fs::path(out_dir);
      fs::create_directories(dir);
      write_file(dir / "sweep.csv", res.csv);
      write_file(dir / "report.json", to_text(res.report));
      std::cout << (res.status == kExitPass ? "PASS" : "FAIL") << "  sweep: " << (dir / "sweep.csv").string() << "\n";
      return res.status;
    });
  }
  return guarded([&] {
    const json cfg = load_config(config);
    const json& s = need(cfg, "scenario", "config");
    const Domain dom = build_domain(need(s, "domain", "scenario"));
    const json nlj = s.value("nonlinearity", json::object());
    const Nonlinearity nl = build_nonlinearity(nlj, dom.dim(), std::nullopt);
    const auto h = check_hypotheses(nl, dom.dim());
    json j{{"nonlinearity", nl.label()}, {"n", dom.dim()},         {"kappa_min", h.kappa_min},
           {"eta_min", h.eta_min},       {"Gamma_max", h.Gamma_max}, {"Xi_min", h.Xi_min},
           {"samples", h.sample_count},  {"pass", h.all_satisfied}};
    std::cout << to_text(j);
    if (!h.all_satisfied) {
      std::cerr << "hypothesis violation: " << h.failing_condition() << "\n";
      return kExitConfig;
    }
    return kExitPass;
  });
}
