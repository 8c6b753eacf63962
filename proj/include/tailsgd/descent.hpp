#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "tailsgd/model.hpp"
#include "tailsgd/spectral.hpp"

namespace tailsgd {

// Run parameters for the stochastic iteration. Plain construction only
// requires gamma*sigma_max < 1 to make sense; schedules additionally enforce
// gamma*kappa_sq < 1/4.
struct SgdConfig {
  double gamma = 0.0;
  long batch_size = 1;
  long T = 1;
  long S = 0;
  std::uint64_t seed = 0;

  static constexpr std::string_view sampling = "uniform-with-replacement";

  long passes(long n) const;  // ceil(batch_size * T / n), recomputed
  void validate() const;
  FilterParams filter_params() const { return FilterParams{gamma, T, S}; }
};

// Accumulates the average of iterates t = S+1..T. Feeding order must be
// strictly increasing in t; iterates outside the window are ignored.
class TailAverager {
 public:
  TailAverager(long S, long T);

  void feed(long t, const Eigen::VectorXd& w);
  long count() const { return count_; }
  bool complete() const { return count_ == T_ - S_; }
  Eigen::VectorXd average() const;  // requires count() >= 1

 private:
  long S_, T_;
  long last_t_ = 0;
  long count_ = 0;
  Eigen::VectorXd sum_;
};

// Raised when an iterate norm passes 1e12: loud failure instead of NaN rows.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(long step);
  long step;
};

// Window average of u_t = (I - gamma*Sigma) u_{t-1} + gamma*h from u_0 = 0,
// computed in closed form through the window-averaged filter.
Eigen::VectorXd population_gd_tail_average(const Problem& problem,
                                           const FilterParams& p);

// Deterministic recursion v_t = (I - gamma*Sigma_hat) v_{t-1} + gamma*h_hat
// from v_0 = 0; returns the window average. The hook, when set, observes
// every iterate (t, v_t). Guards gamma against Sigma_hat's top eigenvalue.
Eigen::VectorXd batch_gd_run(
    const EmpiricalMoments& moments, const FilterParams& p,
    const std::function<void(long, const Eigen::VectorXd&)>& hook = {});

enum class SamplingMode {
  UniformWithReplacement,  // b i.i.d. uniform indices per step, one stream
  FullSweep,               // every step uses all n points: batch descent
};

// Stochastic recursion from w_0 = 0; step t consumes the t-th block of
// batch_size index draws from the run's stream (drawn sequentially within
// the block). Returns the window average. Deterministic given
// (dataset, config). FullSweep precomputes the empirical moments once and
// then runs the exact batch-descent step kernel, so it is bit-identical to
// batch_gd_run.
Eigen::VectorXd minibatch_sgd_run(
    const Dataset& dataset, const SgdConfig& config,
    SamplingMode mode = SamplingMode::UniformWithReplacement);

// Same trajectory, several averaging windows: returns one average per entry
// of tail_starts (each in [0, T-1]). config.S is ignored. A single window is
// exactly minibatch_sgd_run.
std::vector<Eigen::VectorXd> minibatch_sgd_multi_window(
    const Dataset& dataset, const SgdConfig& config,
    const std::vector<long>& tail_starts,
    SamplingMode mode = SamplingMode::UniformWithReplacement);

// Mean over replicates of ||Sigma^(1/2) (w_bar - v_bar)||^2, where v_bar is
// the batch tail average on the dataset (computed once) and each replicate's
// w_bar reruns the stochastic iteration with seed derive_stream(master_seed,
// "replicate", k). The seminorm is in the population spectrum.
double computational_variance(
    const Spectrum& spectrum, const Dataset& dataset, const SgdConfig& config,
    long replicates, std::uint64_t master_seed,
    SamplingMode mode = SamplingMode::UniformWithReplacement);

// Monte-Carlo check of the perturbed-recursion moment bound:
//   mu_t = (I - gamma*H_t) mu_{t-1} + gamma*xi_t,  mu_0 = 0,
// with H_t = H * (1 + perturbation_scale * rademacher) coordinatewise and
// xi_t,i = sqrt(noise_scale_sq * h_i) * normal, so E[H_t^2] <= kappa^2 H and
// E[xi xi^T] = noise_scale_sq * H hold by construction.
struct ProbeConfig {
  Spectrum H;
  double noise_scale_sq = 1.0;     // sigma^2 of the forcing envelope
  double perturbation_scale = 0.0; // in [0, 1)
  FilterParams p;
  double u = 0.0;                  // moment exponent, in [0, 1]
  double alpha = 1.0;              // trace exponent, in (0, 1]
  long replicates = 200;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double empirical_moment = 0.0;  // mean of ||H^(u/2) mu_bar||^2
  double prop_bound = 0.0;        // 16 sigma^2 Tr[H^a] g^(1-u+a) L^(a-u) Ups
  double std_error = 0.0;         // Monte-Carlo standard error of the mean
};

ProbeResult recursion_probe(const ProbeConfig& config);

}  // namespace tailsgd
