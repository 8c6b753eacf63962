// Command-line front end: runs one experiment and writes its CSV output.
//
// Exit codes: 0 success, 1 configuration error, 2 verification failure
// (a verify-filters or probe check did not pass), 3 IO or unexpected error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tailsgd/config.hpp"
#include "tailsgd/csv.hpp"
#include "tailsgd/experiments.hpp"
#include "tailsgd/parallel.hpp"
#include "tailsgd/version.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  int threads = 0;           // 0 = unset: TAILSGD_THREADS, then hardware
  long long seed = -1;       // >= 0 overrides master_seed
};

void add_common(CLI::App* sub, CommonOptions& opt) {
  sub->add_option("--config", opt.config_path,
                  "JSON config file overriding the defaults");
  sub->add_option("--out", opt.out_path, "Output CSV path (default stdout)");
  sub->add_option("--threads", opt.threads,
                  "Worker threads (0 = TAILSGD_THREADS env or hardware)");
  sub->add_option("--seed", opt.seed, "Override master_seed");
}

tailsgd::ExperimentConfig load_config(const CommonOptions& opt,
                                      const std::string& experiment) {
  tailsgd::ExperimentConfig cfg;
  if (opt.config_path.empty()) {
    cfg = tailsgd::default_config(experiment);
  } else {
    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) {
      throw tailsgd::ConfigError("cannot read config file: " + opt.config_path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    cfg = tailsgd::parse_config(buf.str(), experiment);
  }
  if (opt.seed >= 0) {
    cfg.master_seed = static_cast<std::uint64_t>(opt.seed);
  }
  if (!opt.out_path.empty()) cfg.output_path = opt.out_path;
  return cfg;
}

void emit(const std::string& csv, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << csv;
    if (!std::cout) throw std::runtime_error("failed writing to stdout");
  } else {
    tailsgd::write_text_file(out_path, csv);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tail-averaged mini-batch SGD experiments for least squares"};
  app.set_version_flag("--version", std::string(tailsgd::kVersion));
  app.require_subcommand(1);

  CommonOptions opt;
  CLI::App* figure_a =
      app.add_subcommand("figure-a", "Excess risk across smoothness levels");
  CLI::App* figure_grid = app.add_subcommand(
      "figure-grid", "Excess risk across step sizes and batch sizes");
  CLI::App* rates =
      app.add_subcommand("rates", "Excess risk along a sample-size ladder");
  CLI::App* verify =
      app.add_subcommand("verify-filters", "Deterministic filter self-checks");
  CLI::App* probe = app.add_subcommand(
      "probe", "Noise-recursion moment bound on random configurations");
  for (CLI::App* sub : {figure_a, figure_grid, rates, verify, probe}) {
    add_common(sub, opt);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  bool verification_failed = false;
  try {
    if (figure_a->parsed()) {
      const auto cfg = load_config(opt, "figure-a");
      const int threads = tailsgd::resolve_threads(opt.threads);
      emit(tailsgd::run_figure_a(cfg, threads).csv, cfg.output_path);
    } else if (figure_grid->parsed()) {
      const auto cfg = load_config(opt, "figure-grid");
      const int threads = tailsgd::resolve_threads(opt.threads);
      emit(tailsgd::run_figure_grid(cfg, threads).csv, cfg.output_path);
    } else if (rates->parsed()) {
      const auto cfg = load_config(opt, "rates");
      const int threads = tailsgd::resolve_threads(opt.threads);
      emit(tailsgd::run_rates(cfg, threads).csv, cfg.output_path);
    } else if (verify->parsed()) {
      const auto cfg = load_config(opt, "verify-filters");
      const auto res = tailsgd::run_verify_filters(cfg);
      emit(res.csv, cfg.output_path);
      verification_failed = !res.all_pass;
    } else if (probe->parsed()) {
      const auto cfg = load_config(opt, "probe");
      const int threads = tailsgd::resolve_threads(opt.threads);
      const auto res = tailsgd::run_probe(cfg, threads);
      emit(res.csv, cfg.output_path);
      verification_failed = !res.all_pass;
    }
  } catch (const tailsgd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }

  if (verification_failed) {
    std::cerr << "verification failed: see output for failing rows\n";
    return 2;
  }
  return 0;
}
