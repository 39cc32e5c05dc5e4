#include <iomanip>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "slowpass/slowpass.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kAllBlewUp = 3;

struct Common {
  std::string config;
  std::string preset;
  std::vector<std::string> overrides;
  double dt = 0.0;
  std::size_t grid_n = 0;
};

void add_common(CLI::App* app, Common& c) {
  auto* src = app->add_option_group("source", "experiment source");
  src->add_option("--config", c.config, "config file (key = value lines)")->check(CLI::ExistingFile);
  src->add_option("--preset", c.preset, "built-in preset name (see `slowpass presets`)");
  src->require_option(1);
  app->add_option("--override", c.overrides, "key=value applied after the config")->allow_extra_args(false);
  app->add_option("--dt", c.dt, "time step override")->check(CLI::PositiveNumber);
  app->add_option("--grid-n", c.grid_n, "number of grid points override")->check(CLI::Range(3ul, 100000000ul));
}

slowpass::ExperimentSpec resolve(const Common& c) {
  using namespace slowpass;
  ExperimentSpec s = c.preset.empty() ? load_config(c.config) : preset(c.preset);
  std::vector<std::string> problems;
  for (const auto& o : c.overrides) {
    try {
      apply_override(s, o);
    } catch (const std::invalid_argument& e) {
      problems.push_back(e.what());
    }
  }
  if (c.dt > 0.0) set_key(s, "run.dt", detail::fmt(c.dt), "command line");
  if (c.grid_n > 0) set_key(s, "grid.N", std::to_string(c.grid_n), "command line");
  if (!problems.empty()) throw ValidationError(problems);
  return s;
}

int list_presets() {
  for (const auto& p : slowpass::preset_catalog()) {
    std::cout << std::left << std::setw(20) << p.name << p.description << '\n';
  }
  return kOk;
}

int run(const Common& c, const std::string& out, unsigned threads) {
  const auto spec = resolve(c);
  const auto res = slowpass::run_experiment(spec, out.empty() ? spec.name : out, threads,
                                            [](const std::string& m) { std::cerr << m << '\n'; });
  for (const auto& r : res.runs) {
    std::cout << r.name << ": " << slowpass::to_string(r.status);
    if (!r.message.empty()) std::cout << " (" << r.message << ')';
    std::cout << '\n';
    for (const auto& w : r.warnings) std::cout << "  " << w << '\n';
    for (const auto& a : r.analyses) {
      if (!a.ok) std::cout << "  " << a.name << " failed: " << a.message << '\n';
    }
  }
  std::cout << "artifacts in " << res.directory.string() << '\n';
  return res.all_blew_up() ? kAllBlewUp : kOk;
}

int analyze(const Common& c, const std::string& trajectory, const std::vector<std::string>& analyses,
            const std::string& out) {
  auto spec = resolve(c);
  if (!analyses.empty()) {
    std::string list;
    for (const auto& a : analyses) list += (list.empty() ? "" : ",") + a;
    slowpass::set_key(spec, "analyses", list, "command line");
  }
  slowpass::validate(spec);
  const auto rec = slowpass::analyze_trajectory(spec, trajectory, out.empty() ? "analysis" : out);
  int failed = 0;
  for (const auto& a : rec.analyses) {
    std::cout << a.name << ": " << (a.ok ? "ok" : "failed: " + a.message) << '\n';
    failed += a.ok ? 0 : 1;
  }
  return failed ? 1 : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slowpass: delayed bifurcations in 1-D reaction-diffusion models"};
  app.require_subcommand(1);

  auto* presets = app.add_subcommand("presets", "list the built-in presets");

  Common run_c;
  std::string run_out;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* run_cmd = app.add_subcommand("run", "simulate and analyze an experiment");
  add_common(run_cmd, run_c);
  run_cmd->add_option("--out", run_out, "artifact directory (default: experiment name)");
  run_cmd->add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);

  Common an_c;
  std::string trajectory, an_out;
  std::vector<std::string> analyses;
  auto* an_cmd = app.add_subcommand("analyze", "run analyses on a stored trajectory");
  add_common(an_cmd, an_c);
  an_cmd->add_option("--trajectory", trajectory, "binary trajectory file")->required()->check(CLI::ExistingFile);
  an_cmd->add_option("--analyses", analyses, "analyses to run (default: those in the config)")->delimiter(',');
  an_cmd->add_option("--out", an_out, "output directory (default: analysis)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*presets) return list_presets();
    if (*run_cmd) return run(run_c, run_out, threads);
    return analyze(an_c, trajectory, analyses, an_out);
  } catch (const slowpass::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
