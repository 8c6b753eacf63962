#include "tailsgd/theory.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace tailsgd {

namespace {

long round_half_up_at_least_one(double x) {
  long v = static_cast<long>(std::floor(x + 0.5));
  return std::max<long>(1, v);
}

}  // namespace

double approx_error(const Spectrum& spectrum, const SourceVector& source,
                    const FilterParams& p) {
  spectrum.validate();
  p.validate();
  if (source.coeffs.size() != spectrum.dim()) {
    throw std::invalid_argument("approx_error: source/spectrum dim mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < spectrum.dim(); ++i) {
    const double s = spectrum.eigenvalues(i);
    const double rr = tail_residual(s, p);
    total += s * rr * rr * source.coeffs(i) * source.coeffs(i);
  }
  return total;
}

BoundReport bound_terms(const Spectrum& spectrum, const SourceVector& source,
                        const FilterParams& p, long b, long n, double alpha) {
  spectrum.validate();
  p.validate();
  if (b < 1) throw std::invalid_argument("bound_terms: batch size must be >= 1");
  if (n < 1) throw std::invalid_argument("bound_terms: sample size must be >= 1");
  if (!(alpha > 0.0) || !(alpha <= 1.0)) {
    throw std::invalid_argument("bound_terms: alpha must lie in (0, 1]");
  }
  if (!(p.gamma * spectrum.kappa_sq < 0.25)) {
    throw std::domain_error(
        "bound_terms: step size violates gamma * kappa_sq < 1/4");
  }

  BoundReport rep;
  rep.alpha = alpha;
  rep.approx_term = approx_error(spectrum, source, p);

  const double gl = p.gamma * static_cast<double>(p.L());
  const double lambda = 1.0 / gl;
  const double eff_dim = effective_dimension(spectrum, lambda);
  rep.sample_term = eff_dim / static_cast<double>(n);

  rep.computational_term = p.gamma * spectrum.trace_pow(alpha) /
                           (static_cast<double>(b) * std::pow(gl, 1.0 - alpha));

  rep.total = rep.approx_term + rep.sample_term + rep.computational_term;
  rep.n_condition_ok =
      static_cast<double>(n) >=
      16.0 * spectrum.kappa_sq * gl * std::max(1.0, eff_dim);
  return rep;
}

long ScheduleChoice::passes() const {
  if (n <= 0) throw std::logic_error("ScheduleChoice::passes: n not set");
  return (batch_size * T + n - 1) / n;
}

ScheduleChoice schedule(char variant, long n, double r, double nu,
                        double kappa_sq) {
  if (variant != 'a' && variant != 'b' && variant != 'c') {
    throw std::invalid_argument("schedule: variant must be 'a', 'b' or 'c'");
  }
  if (n < 2) throw std::invalid_argument("schedule: need n >= 2");
  if (!(r >= 0.0)) throw std::invalid_argument("schedule: need r >= 0");
  if (!(nu > 0.0)) throw std::invalid_argument("schedule: need nu > 0");
  if (!(kappa_sq > 0.0)) {
    throw std::invalid_argument("schedule: need kappa_sq > 0");
  }

  const double dn = static_cast<double>(n);
  const double expo = (2.0 * r + nu) / (2.0 * r + 1.0 + nu);
  const double gamma_cap = 0.9 / (4.0 * kappa_sq);

  ScheduleChoice sc;
  sc.variant = variant;
  sc.n = n;
  sc.r = r;
  sc.nu = nu;

  if (variant == 'a') {
    sc.batch_size = 1;
    sc.T = n;
    sc.gamma = std::min(std::pow(dn, -expo), gamma_cap);
  } else {
    sc.T = round_half_up_at_least_one(std::pow(dn, 1.0 / (2.0 * r + 1.0 + nu)));
    sc.batch_size =
        (variant == 'b') ? round_half_up_at_least_one(std::pow(dn, expo)) : n;
    sc.gamma = std::min(1.0, gamma_cap);
  }

  if (r > 0.5) {
    sc.S = sc.T / 2;
    sc.K = 3.0;
  } else {
    sc.S = 0;
    sc.K = 1.0;
  }
  sc.L = sc.T - sc.S;
  return sc;
}

std::vector<SaturationPoint> saturation_curves(
    const Spectrum& spectrum, double r, double gamma,
    const std::vector<long>& tail_lengths, AveragingMode mode) {
  spectrum.validate();
  if (!(r >= 0.0)) throw std::invalid_argument("saturation_curves: need r >= 0");
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("saturation_curves: need gamma > 0");
  }
  if (tail_lengths.empty()) {
    throw std::invalid_argument("saturation_curves: need at least one length");
  }

  // Admissible frequency grid: dense in log scale across the whole stable
  // range, plus the exact eigenvalues so discrete spectra are never missed.
  const double hi = 0.99 / gamma;
  double lo = spectrum.sigma_min();
  lo = std::min(lo, hi);
  std::set<double> sigma_set;
  if (lo < hi) {
    for (double s : log_grid(lo, hi, 2000)) sigma_set.insert(s);
  } else {
    sigma_set.insert(lo);
  }
  for (Eigen::Index i = 0; i < spectrum.dim(); ++i) {
    const double s = spectrum.eigenvalues(i);
    if (s <= hi) sigma_set.insert(s);
  }

  std::vector<SaturationPoint> out;
  out.reserve(tail_lengths.size());
  for (long len : tail_lengths) {
    if (len < 1) {
      throw std::invalid_argument("saturation_curves: lengths must be >= 1");
    }
    FilterParams p;
    p.gamma = gamma;
    if (mode == AveragingMode::Uniform) {
      p.S = 0;
      p.T = len;
    } else {
      p.S = len;
      p.T = 2 * len;
    }
    p.validate();

    double worst = 0.0;
    for (double s : sigma_set) {
      const double rr = tail_residual(s, p);
      worst = std::max(worst, std::pow(s, 2.0 * r + 1.0) * rr * rr);
    }
    out.push_back(SaturationPoint{gamma * static_cast<double>(p.T), worst});
  }
  return out;
}

double slope_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) {
    throw std::invalid_argument("slope_fit: need at least two points");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) {
      throw std::invalid_argument("slope_fit: coordinates must be positive");
    }
    const double lx = std::log(x);
    const double ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(points.size());
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) {
    throw std::invalid_argument("slope_fit: x values are all identical");
  }
  return (m * sxy - sx * sy) / denom;
}

}  // namespace tailsgd
