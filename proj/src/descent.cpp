#include "tailsgd/descent.hpp"

#include <cmath>
#include <string>

#include "tailsgd/rng.hpp"

namespace tailsgd {

namespace {

constexpr double kDivergenceNormSq = 1e24;  // ||w|| > 1e12

// The one batch-descent step expression. Shared verbatim between
// batch_gd_run and the full-sweep sampling mode so the two are bit-identical.
inline void batch_step(Eigen::VectorXd& v, const Eigen::MatrixXd& sigma_hat,
                       const Eigen::VectorXd& h_hat, double gamma) {
  v += gamma * (h_hat - sigma_hat * v);
}

double top_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

long SgdConfig::passes(long n) const {
  if (n < 1) throw std::domain_error("SgdConfig::passes: n must be >= 1");
  const long work = batch_size * T;
  return (work + n - 1) / n;
}

void SgdConfig::validate() const {
  filter_params().validate();
  if (batch_size < 1)
    throw std::domain_error("SgdConfig: batch_size must be >= 1");
}

TailAverager::TailAverager(long S, long T) : S_(S), T_(T) {
  if (T < 1 || S < 0 || S > T - 1)
    throw std::domain_error("TailAverager: need 0 <= S <= T-1");
}

void TailAverager::feed(long t, const Eigen::VectorXd& w) {
  if (t <= last_t_)
    throw std::logic_error("TailAverager: iterates must arrive in strictly increasing t");
  last_t_ = t;
  if (t <= S_ || t > T_) return;  // outside the window: ignored, not summed
  if (count_ == 0)
    sum_ = w;
  else
    sum_ += w;
  ++count_;
}

Eigen::VectorXd TailAverager::average() const {
  if (count_ == 0)
    throw std::logic_error("TailAverager: no in-window iterates fed");
  return sum_ / static_cast<double>(count_);
}

DivergenceError::DivergenceError(long at_step)
    : std::runtime_error("iterate norm exceeded 1e12 at step " +
                         std::to_string(at_step)),
      step(at_step) {}

Eigen::VectorXd population_gd_tail_average(const Problem& problem,
                                           const FilterParams& p) {
  problem.validate();
  return apply_filter(problem.spectrum, problem.h(), FilterKind::TailFilter, p);
}

Eigen::VectorXd batch_gd_run(
    const EmpiricalMoments& moments, const FilterParams& p,
    const std::function<void(long, const Eigen::VectorXd&)>& hook) {
  p.validate();
  if (moments.sigma_hat.rows() != moments.sigma_hat.cols() ||
      moments.sigma_hat.rows() != moments.h_hat.size())
    throw std::invalid_argument("batch_gd_run: inconsistent moments");
  if (p.gamma * top_eigenvalue(moments.sigma_hat) >= 1.0)
    throw std::domain_error(
        "batch_gd_run: gamma too large for the empirical top eigenvalue");

  Eigen::VectorXd v = Eigen::VectorXd::Zero(moments.h_hat.size());
  TailAverager avg(p.S, p.T);
  for (long t = 1; t <= p.T; ++t) {
    batch_step(v, moments.sigma_hat, moments.h_hat, p.gamma);
    if (hook) hook(t, v);
    avg.feed(t, v);
  }
  return avg.average();
}

std::vector<Eigen::VectorXd> minibatch_sgd_multi_window(
    const Dataset& dataset, const SgdConfig& config,
    const std::vector<long>& tail_starts, SamplingMode mode) {
  config.validate();
  if (dataset.n < 1) throw std::domain_error("minibatch_sgd: empty dataset");
  if (tail_starts.empty())
    throw std::invalid_argument("minibatch_sgd: no averaging window given");

  std::vector<TailAverager> averagers;
  averagers.reserve(tail_starts.size());
  for (long s : tail_starts) averagers.emplace_back(s, config.T);

  const long d = dataset.xs.rows();
  const auto n = static_cast<std::size_t>(dataset.n);

  if (mode == SamplingMode::FullSweep) {
    const EmpiricalMoments moments = empirical_moments(dataset);
    if (config.gamma * top_eigenvalue(moments.sigma_hat) >= 1.0)
      throw std::domain_error(
          "minibatch_sgd (full sweep): gamma too large for the empirical top eigenvalue");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    for (long t = 1; t <= config.T; ++t) {
      batch_step(v, moments.sigma_hat, moments.h_hat, config.gamma);
      for (auto& a : averagers) a.feed(t, v);
    }
  } else {
    Rng rng(derive_stream(config.seed, "sgd-indices", 0));
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd grad(d);
    const double scale = config.gamma / static_cast<double>(config.batch_size);
    for (long t = 1; t <= config.T; ++t) {
      grad.setZero();
      for (long k = 0; k < config.batch_size; ++k) {
        const auto j = static_cast<long>(rng.uniform_index(n));
        const double err = dataset.xs.col(j).dot(w) - dataset.ys(j);
        grad += err * dataset.xs.col(j);
      }
      w -= scale * grad;
      if (!(w.squaredNorm() <= kDivergenceNormSq)) throw DivergenceError(t);
      for (auto& a : averagers) a.feed(t, w);
    }
  }

  std::vector<Eigen::VectorXd> out;
  out.reserve(averagers.size());
  for (const auto& a : averagers) out.push_back(a.average());
  return out;
}

Eigen::VectorXd minibatch_sgd_run(const Dataset& dataset,
                                  const SgdConfig& config, SamplingMode mode) {
  return minibatch_sgd_multi_window(dataset, config, {config.S}, mode)[0];
}

double computational_variance(const Spectrum& spectrum, const Dataset& dataset,
                              const SgdConfig& config, long replicates,
                              std::uint64_t master_seed, SamplingMode mode) {
  if (replicates < 1)
    throw std::domain_error("computational_variance: replicates must be >= 1");
  if (spectrum.dim() != dataset.xs.rows())
    throw std::invalid_argument("computational_variance: spectrum/dataset dim mismatch");
  const EmpiricalMoments moments = empirical_moments(dataset);
  const Eigen::VectorXd v_bar = batch_gd_run(moments, config.filter_params());

  double acc = 0.0;
  for (long k = 0; k < replicates; ++k) {
    SgdConfig cfg = config;
    cfg.seed = derive_stream(master_seed, "replicate", static_cast<std::uint64_t>(k));
    const Eigen::VectorXd w_bar = minibatch_sgd_run(dataset, cfg, mode);
    const Eigen::VectorXd diff = w_bar - v_bar;
    acc += spectrum.eigenvalues.cwiseProduct(diff.cwiseAbs2()).sum();
  }
  return acc / static_cast<double>(replicates);
}

ProbeResult recursion_probe(const ProbeConfig& config) {
  config.H.validate();
  config.p.validate();
  if (!(config.noise_scale_sq >= 0.0))
    throw std::domain_error("recursion_probe: noise_scale_sq must be >= 0");
  if (!(config.perturbation_scale >= 0.0) || config.perturbation_scale >= 1.0)
    throw std::domain_error("recursion_probe: perturbation_scale must be in [0, 1)");
  if (!(config.u >= 0.0) || config.u > 1.0)
    throw std::domain_error("recursion_probe: u must be in [0, 1]");
  if (!(config.alpha > 0.0) || config.alpha > 1.0)
    throw std::domain_error("recursion_probe: alpha must be in (0, 1]");
  if (config.replicates < 1)
    throw std::domain_error("recursion_probe: replicates must be >= 1");

  // Operational kappa^2: E[H_t^2] <= kappa^2 H needs sigma_max*(1+rho^2);
  // the trace keeps it consistent with the model convention.
  const double rho = config.perturbation_scale;
  const double kappa_sq =
      std::max(config.H.trace(), config.H.sigma_max() * (1.0 + rho * rho));
  if (config.p.gamma * kappa_sq > 0.25)
    throw std::domain_error("recursion_probe: requires gamma*kappa_sq <= 1/4");

  const long d = config.H.dim();
  const long T = config.p.T;
  const double gamma = config.p.gamma;
  Eigen::VectorXd xi_scale(d);
  for (long i = 0; i < d; ++i)
    xi_scale(i) = std::sqrt(config.noise_scale_sq * config.H.eigenvalues(i));

  double sum = 0.0, sum_sq = 0.0;
  Eigen::VectorXd mu(d);
  for (long k = 0; k < config.replicates; ++k) {
    Rng rng(derive_stream(config.seed, "probe", static_cast<std::uint64_t>(k)));
    mu.setZero();
    TailAverager avg(config.p.S, T);
    for (long t = 1; t <= T; ++t) {
      // Draw order per step: d sign flips for the operator, then d normals
      // for the forcing.
      for (long i = 0; i < d; ++i) {
        const double h = config.H.eigenvalues(i) * (1.0 + rho * rng.rademacher());
        mu(i) *= 1.0 - gamma * h;
      }
      for (long i = 0; i < d; ++i) mu(i) += gamma * xi_scale(i) * rng.normal();
      avg.feed(t, mu);
    }
    const Eigen::VectorXd m = avg.average();
    double v = 0.0;
    for (long i = 0; i < d; ++i)
      v += std::pow(config.H.eigenvalues(i), config.u) * m(i) * m(i);
    sum += v;
    sum_sq += v * v;
  }

  const double reps = static_cast<double>(config.replicates);
  ProbeResult res;
  res.empirical_moment = sum / reps;
  if (config.replicates > 1) {
    const double var =
        std::max(0.0, (sum_sq - sum * sum / reps) / (reps - 1.0));
    res.std_error = std::sqrt(var / reps);
  }
  const double L = static_cast<double>(config.p.L());
  const double upsilon = 1.0 + static_cast<double>(config.p.S + 1) / L;
  res.prop_bound = 16.0 * config.noise_scale_sq *
                   config.H.trace_pow(config.alpha) *
                   std::pow(gamma, 1.0 - config.u + config.alpha) *
                   std::pow(L, config.alpha - config.u) * upsilon;
  return res;
}

}  // namespace tailsgd
