// Acceptance gate: one line per criterion, nonzero exit on any failure.
// Usage: acceptance [path-to-cli [scratch-dir]]
// The CLI path and scratch directory enable the end-to-end determinism
// checks; without them those checks fall back to in-process runs.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tailsgd/config.hpp"
#include "tailsgd/csv.hpp"
#include "tailsgd/descent.hpp"
#include "tailsgd/experiments.hpp"
#include "tailsgd/model.hpp"
#include "tailsgd/parallel.hpp"
#include "tailsgd/rng.hpp"
#include "tailsgd/spectral.hpp"
#include "tailsgd/theory.hpp"

using namespace tailsgd;

namespace {

int g_failures = 0;
int g_index = 0;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

void report(const std::string& name, bool pass, const std::string& detail,
            double elapsed, double limit_s) {
  ++g_index;
  const bool in_time = elapsed < limit_s;
  const bool ok = pass && in_time;
  if (!ok) ++g_failures;
  const std::string limit_note =
      (in_time ? " < " : " EXCEEDS ") + format_double(limit_s) + " s";
  std::printf("[%d/9] %s %s: %s [%.3f s%s]\n", g_index, ok ? "PASS" : "FAIL",
              name.c_str(), detail.c_str(), elapsed, limit_note.c_str());
  std::fflush(stdout);
}

const std::vector<double> kGammas{0.01, 0.1, 0.24};
const std::vector<std::pair<long, long>> kWindows{
    {0, 10}, {5, 10}, {127, 255}, {499, 1000}, {999, 1000}};

// Criterion 1: the closed-form window average matches the direct average of
// the per-iterate closed forms, and the filter/residual identity holds.
void criterion_filter_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  double worst_avg_ratio = 0.0;  // gap / tolerance, tolerance 1e-10*max(1,gT)
  double worst_identity = 0.0;   // |R + sigma*G - 1|, tolerance 1e-12
  for (double gamma : kGammas) {
    const Eigen::VectorXd sigmas = log_grid(1e-8, 0.99 / gamma, 20);
    for (const auto& [S, T] : kWindows) {
      const FilterParams p{gamma, T, S};
      const double tol = 1e-10 * std::max(1.0, gamma * static_cast<double>(T));
      for (double sigma : sigmas) {
        long double acc = 0.0L;
        for (long t = S + 1; t <= T; ++t) acc += gd_filter(sigma, p, t);
        const double direct = static_cast<double>(acc / (T - S));
        const double closed = tail_filter(sigma, p);
        worst_avg_ratio =
            std::max(worst_avg_ratio, std::abs(closed - direct) / tol);
        const double identity =
            std::abs(tail_residual(sigma, p) + sigma * closed - 1.0);
        worst_identity = std::max(worst_identity, identity);
      }
    }
  }
  const bool pass = worst_avg_ratio <= 1.0 && worst_identity <= 1e-12;
  std::ostringstream d;
  d << "worst average gap at " << format_double(worst_avg_ratio)
    << "x the 1e-10*max(1,gamma*T) tolerance; identity gap "
    << format_double(worst_identity) << " (tolerance 1e-12)";
  report("window-filter closed forms match direct averages", pass, d.str(),
         seconds_since(start), 1.0);
}

// Criterion 2: grid sup of sigma^u * R is below (gamma*L)^(-u) with no
// tolerance, for u in {0, 1/2, 1}.
void criterion_residual_sup() {
  const auto start = std::chrono::steady_clock::now();
  double worst_excess = -1e300;
  bool pass = true;
  for (double gamma : kGammas) {
    const Eigen::VectorXd sigmas = log_grid(1e-8, 0.99 / gamma, 20);
    for (const auto& [S, T] : kWindows) {
      const FilterParams p{gamma, T, S};
      const double K = static_cast<double>(T + S) / static_cast<double>(T - S);
      for (double u : {0.0, 0.5, 1.0}) {
        const SupGap gap = residual_sup_gap(p, u, sigmas, K);
        worst_excess =
            std::max(worst_excess, gap.observed_sup - gap.lemma_bound);
        if (gap.observed_sup > gap.lemma_bound) pass = false;
      }
    }
  }
  std::ostringstream d;
  d << "max over the grid of observed sup minus envelope is "
    << format_double(worst_excess) << " (must be <= 0 exactly)";
  report("residual grid sups stay below their envelopes", pass, d.str(),
         seconds_since(start), 1.0);
}

// Criterion 3: worst-case residual-risk slopes. Tail-half averaging tracks
// -(2r+1) for r in {0, 1, 2}; uniform averaging saturates near -2 at r = 2.
void criterion_saturation() {
  const auto start = std::chrono::steady_clock::now();
  const Spectrum spec = make_spectrum(1000, 0.5);
  std::vector<long> lengths;
  for (long l = 4; l <= 4096; l *= 2) lengths.push_back(l);

  auto slope_of = [&](double r, AveragingMode mode) {
    const auto pts = saturation_curves(spec, r, 0.1, lengths, mode);
    std::vector<std::pair<double, double>> xy;
    for (const auto& pt : pts) xy.emplace_back(pt.gamma_T, pt.residual_risk);
    return slope_fit(xy);
  };

  bool pass = true;
  std::ostringstream d;
  for (double r : {0.0, 1.0, 2.0}) {
    const double s = slope_of(r, AveragingMode::TailHalf);
    const double target = -(2.0 * r + 1.0);
    if (std::abs(s - target) > 0.2) pass = false;
    d << "tail r=" << format_double(r) << " slope " << format_double(s)
      << " (target " << format_double(target) << "+-0.2); ";
  }
  const double uni = slope_of(2.0, AveragingMode::Uniform);
  if (std::abs(uni - (-2.0)) > 0.2) pass = false;
  d << "uniform r=2 slope " << format_double(uni) << " (target -2+-0.2)";
  report("tail-averaged decay beats the uniform saturation ceiling", pass,
         d.str(), seconds_since(start), 5.0);
}

// Criterion 4: the iterative batch recursion agrees with the spectral form
// of the same estimator to 1e-8 relative on random instances.
void criterion_duality() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(424242);
  double worst_rel = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const long d = 1 + static_cast<long>(rng.uniform_index(10));
    const long n = 1 + static_cast<long>(rng.uniform_index(50));
    const long T = 1 + static_cast<long>(rng.uniform_index(200));
    const long S =
        static_cast<long>(rng.uniform_index(static_cast<std::size_t>(T)));

    Dataset data;
    data.n = n;
    data.xs.resize(d, n);
    data.ys.resize(n);
    for (long j = 0; j < n; ++j) {
      for (long i = 0; i < d; ++i) data.xs(i, j) = rng.normal();
      data.ys(j) = rng.normal();
    }
    const EmpiricalMoments m = empirical_moments(data);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.sigma_hat);
    const double top = eig.eigenvalues().maxCoeff();
    const FilterParams p{0.5 / std::max(top, 1e-12), T, S};

    Eigen::VectorXd gvals(d);
    for (long i = 0; i < d; ++i)
      gvals(i) = tail_filter(std::max(eig.eigenvalues()(i), 0.0), p);
    const Eigen::VectorXd spectral =
        eig.eigenvectors() *
        (gvals.asDiagonal() * (eig.eigenvectors().transpose() * m.h_hat));
    const Eigen::VectorXd iterative = batch_gd_run(m, p);
    worst_rel = std::max(worst_rel, (iterative - spectral).norm() /
                                        std::max(spectral.norm(), 1e-12));
  }
  std::ostringstream d;
  d << "worst relative gap " << format_double(worst_rel)
    << " over 20 random instances (tolerance 1e-8)";
  report("batch recursion equals its spectral closed form", worst_rel <= 1e-8,
         d.str(), seconds_since(start), 2.0);
}

// Criterion 5: excess risk along the one-pass schedule ladder decays with a
// log-log slope in [-1.0, -0.6].
void criterion_rates(int threads) {
  const auto start = std::chrono::steady_clock::now();
  const RatesResult res = run_rates(default_config("rates"), threads);
  double slope = std::nan("");
  if (!res.rows.empty() && res.rows.back().kind == "slope")
    slope = res.rows.back().mean_excess_risk;
  const bool pass = std::isfinite(slope) && slope >= -1.0 && slope <= -0.6;
  std::ostringstream d;
  d << "fitted excess-risk slope " << format_double(slope)
    << " (required within [-1.0, -0.6])";
  report("sample-size ladder reproduces the expected rate", pass, d.str(),
         seconds_since(start), 300.0);
}

// Criterion 6: smoothness sweep shape: parity at r=0, a clear tail win at
// r=2, and flattening of the uniform curve between r=1.5 and r=2.
void criterion_smoothness_sweep(int threads) {
  const auto start = std::chrono::steady_clock::now();
  const FigureAResult res = run_figure_a(default_config("figure-a"), threads);

  auto mean_of = [&](double r, const std::string& mode) {
    for (const auto& row : res.rows) {
      if (row.mode == mode && std::abs(row.r - r) < 1e-12)
        return row.mean_excess_risk;
    }
    return std::nan("");
  };

  const double u0 = mean_of(0.0, "uniform"), t0 = mean_of(0.0, "tail");
  const double u15 = mean_of(1.5, "uniform"), u2 = mean_of(2.0, "uniform");
  const double t2 = mean_of(2.0, "tail");

  const double parity = t0 / u0;
  const bool clause1 = parity >= 0.25 && parity <= 4.0;
  const bool clause2 = t2 <= 0.5 * u2;
  const double flat = u15 / u2;
  const bool clause3 = flat >= 0.5 && flat <= 2.0;

  std::ostringstream d;
  d << "tail/uniform at r=0: " << format_double(parity)
    << " (within [0.25,4]); tail vs uniform at r=2: " << format_double(t2)
    << " <= 0.5*" << format_double(u2)
    << "; uniform r=1.5 over r=2: " << format_double(flat)
    << " (within [0.5,2])";
  report("smoothness sweep shows the uniform-averaging lag",
         clause1 && clause2 && clause3, d.str(), seconds_since(start), 180.0);
}

// Criterion 7: the stochastic-vs-batch gap shrinks with the batch size:
// variance at b=1 is at least 4x the variance at b=16 on a fixed dataset.
void criterion_minibatch_variance() {
  const auto start = std::chrono::steady_clock::now();
  Problem prob;
  prob.spectrum = make_spectrum(50, 0.5);
  prob.source = make_source(prob.spectrum, 0.5);
  prob.noise_std = 1.0;
  const Dataset data = sample_dataset(prob, 1000, 777);

  SgdConfig cfg;
  cfg.gamma = 0.05;
  cfg.T = 500;
  cfg.S = 250;
  cfg.batch_size = 1;
  const double v1 =
      computational_variance(prob.spectrum, data, cfg, 50, 12345);
  cfg.batch_size = 16;
  const double v16 =
      computational_variance(prob.spectrum, data, cfg, 50, 12345);
  const double ratio = v1 / v16;
  std::ostringstream d;
  d << "variance " << format_double(v1) << " at b=1 vs " << format_double(v16)
    << " at b=16, ratio " << format_double(ratio) << " (required >= 4)";
  report("minibatching cuts the stochastic variance", ratio >= 4.0, d.str(),
         seconds_since(start), 120.0);
}

// Criterion 8: randomized perturbed-recursion probes stay below the moment
// bound plus three standard errors.
void criterion_probe(int threads) {
  const auto start = std::chrono::steady_clock::now();
  const ProbeRunResult res = run_probe(default_config("probe"), threads);
  double min_slack = 1e300;
  for (const auto& row : res.rows) {
    min_slack =
        std::min(min_slack, row.bound + 3.0 * row.std_error - row.empirical);
  }
  std::ostringstream d;
  d << (res.all_pass ? "all " : "NOT all ") << res.rows.size()
    << " probe configurations within bound + 3 SE (minimum slack "
    << format_double(min_slack) << ")";
  report("noise-recursion probes respect the moment bound", res.all_pass,
         d.str(), seconds_since(start), 60.0);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Criterion 9: byte-identical CSV across repeated runs and thread counts,
// end-to-end through the CLI when its path was handed to us.
void criterion_determinism(const char* cli, const char* scratch) {
  const auto start = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream d;

  if (cli != nullptr && scratch != nullptr) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(scratch, ec);
    const std::string dir = scratch;
    const std::string cfg_path = dir + "/figa.json";
    write_text_file(cfg_path,
                    R"({"experiment": "figure-a", "d": 20, "n": 200, )"
                    R"("replicates": 4, "r_grid": [0, 1], "master_seed": 777})");

    auto run = [&](const std::string& args) {
      const std::string cmd =
          "\"" + std::string(cli) + "\" " + args + " > /dev/null 2>&1";
      return std::system(cmd.c_str()) == 0;
    };

    bool ok = true;
    ok = ok && run("figure-a --config \"" + cfg_path + "\" --out \"" + dir +
                   "/a1.csv\" --threads 1");
    ok = ok && run("figure-a --config \"" + cfg_path + "\" --out \"" + dir +
                   "/a4.csv\" --threads 4");
    ok = ok && run("verify-filters --out \"" + dir + "/v1.csv\"");
    ok = ok && run("verify-filters --out \"" + dir + "/v2.csv\"");
    ok = ok && run("probe --out \"" + dir + "/p1.csv\" --threads 1");
    ok = ok && run("probe --out \"" + dir + "/p2.csv\" --threads 2");

    const bool a_same = read_file(dir + "/a1.csv") == read_file(dir + "/a4.csv");
    const bool v_same = read_file(dir + "/v1.csv") == read_file(dir + "/v2.csv");
    const bool p_same = read_file(dir + "/p1.csv") == read_file(dir + "/p2.csv");
    const bool nonempty = !read_file(dir + "/a1.csv").empty();
    pass = ok && nonempty && a_same && v_same && p_same;
    d << "CLI reruns byte-identical: smoothness sweep across threads "
      << (a_same ? "yes" : "NO") << ", filter checks " << (v_same ? "yes" : "NO")
      << ", probe across threads " << (p_same ? "yes" : "NO")
      << (ok ? "" : " (a CLI invocation failed)");
  } else {
    const ExperimentConfig cfg = parse_config(
        R"({"d": 20, "n": 200, "replicates": 4, "r_grid": [0, 1], "master_seed": 777})",
        "figure-a");
    const bool a_same = run_figure_a(cfg, 1).csv == run_figure_a(cfg, 4).csv;
    const bool p_same = run_probe(default_config("probe"), 1).csv ==
                        run_probe(default_config("probe"), 2).csv;
    pass = a_same && p_same;
    d << "in-process reruns byte-identical across thread counts: sweep "
      << (a_same ? "yes" : "NO") << ", probe " << (p_same ? "yes" : "NO")
      << " (no CLI path given)";
  }
  report("identical configs yield byte-identical outputs", pass, d.str(),
         seconds_since(start), 120.0);
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = resolve_threads(0);
  criterion_filter_equivalence();
  criterion_residual_sup();
  criterion_saturation();
  criterion_duality();
  criterion_rates(threads);
  criterion_smoothness_sweep(threads);
  criterion_minibatch_variance();
  criterion_probe(threads);
  criterion_determinism(argc > 1 ? argv[1] : nullptr,
                        argc > 2 ? argv[2] : nullptr);

  if (g_failures == 0) {
    std::printf("all 9 acceptance checks passed\n");
    return 0;
  }
  std::printf("%d acceptance check(s) FAILED\n", g_failures);
  return 1;
}
