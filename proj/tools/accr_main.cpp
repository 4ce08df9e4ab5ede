#include "accr/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <unistd.h>

namespace {

struct Flags {
  std::string example, config, box, preset, u, v, w, normalization;
  std::optional<int> n, order, samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma;
  std::vector<std::string> tol, field;
  bool json_only = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--example", f.example, "built-in example name");
  sub->add_option("--config", f.config, "JSON config file");
  sub->add_option("--n", f.n, "half dimension");
  sub->add_option("--order", f.order, "jet order (1-3)");
  sub->add_option("--samples", f.samples, "number of sample points");
  sub->add_option("--seed", f.seed, "sampling seed");
  sub->add_option("--box", f.box, "lo:hi or comma-separated per-coordinate intervals");
  sub->add_option("--tol", f.tol, "tolerance override name=value")->take_all();
  sub->add_option("--sigma", f.sigma, "pin the soliton constant");
  sub->add_option("--preset", f.preset, "named transformation triple");
  sub->add_option("--u", f.u, "transformation function u");
  sub->add_option("--v", f.v, "transformation function v");
  sub->add_option("--w", f.w, "transformation function w");
  sub->add_option("--normalization", f.normalization, "reeb or raw");
  sub->add_option("--field", f.field, "torse-forming candidate components")->take_all();
  sub->add_flag("--json", f.json_only, "JSON only, no table on stderr");
}

accr::cli::RunConfig build_config(const Flags& f) {
  using namespace accr::cli;
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config_file(f.config);
  if (!f.example.empty()) {
    cfg.example = f.example;
    cfg.manifold.reset();
  }
  if (f.n) cfg.n = *f.n;
  if (f.order) cfg.order = *f.order;
  if (f.samples) cfg.samples = *f.samples;
  if (f.seed) cfg.seed = *f.seed;
  if (f.sigma) cfg.sigma = *f.sigma;
  if (!f.field.empty()) cfg.field = f.field;
  for (const auto& t : f.tol) {
    const auto [k, v] = parse_tolerance(t);
    cfg.tolerances[k] = v;
  }
  if (!f.box.empty()) {
    const int dim = cfg.manifold ? static_cast<int>((*cfg.manifold).value("coords", Json::array()).size()) : 2 * cfg.n + 1;
    cfg.box = parse_box(f.box, dim);
  }
  if (!f.preset.empty() || !f.u.empty() || !f.v.empty() || !f.w.empty()) {
    TripleSpec ts;
    ts.preset = f.preset;
    ts.u = f.u;
    ts.v = f.v;
    ts.w = f.w;
    cfg.triple = ts;
  }
  if (!f.normalization.empty()) {
    if (!cfg.triple) throw ConfigError("--normalization needs a transformation");
    cfg.triple->normalization = parse_normalization(f.normalization);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace accr::cli;
  CLI::App app{"accr: almost contact B-metric structures, contact conformal transformations, soliton checks"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Flags flags;
  std::string command;
  for (const char* name : {"check", "classify", "lee", "torse", "transform", "soliton"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, flags);
    sub->callback([&command, name] { command = name; });
  }
  CLI::App* example = app.add_subcommand("example", "example registry");
  example->require_subcommand(1);
  CLI::App* list = example->add_subcommand("list", "list built-in examples and presets");
  list->add_flag("--json", flags.json_only, "print JSON only");
  list->callback([&command] { command = "example list"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kUsageError;
  }

  try {
    Report report("none");
    if (command == "example list") {
      report = cmd_example_list();
    } else {
      const RunConfig cfg = build_config(flags);
      if (command == "check") report = cmd_check(cfg);
      else if (command == "classify") report = cmd_classify(cfg);
      else if (command == "lee") report = cmd_lee(cfg);
      else if (command == "torse") report = cmd_torse(cfg);
      else if (command == "transform") report = cmd_transform(cfg);
      else report = cmd_soliton(cfg);
    }
    std::cout << report.dump();
    if (!flags.json_only && isatty(STDERR_FILENO)) std::cerr << report.table();
    return report.exit_code();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const accr::ParseError& e) {
    std::cerr << "expression error: " << e.what() << "\n";
    return kUsageError;
  } catch (const accr::UnboundVariable& e) {
    std::cerr << "expression error: " << e.what() << "\n";
    return kUsageError;
  } catch (const accr::ChartError& e) {
    std::cerr << "chart error: " << e.what() << "\n";
    return kUsageError;
  } catch (const accr::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kNumericError;
  } catch (const accr::SingularMetric& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericError;
  }
}
