#include "tailsgd/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace tailsgd {

namespace {

// Residual sup constant for the u > 1 regime. Calibrated by brute force:
// max over u in {1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0}, K in {2, 3, 5},
// gamma in {0.01, 0.1, 0.24}, T in {8, 16, ..., 4096}, with S scanned over
// the K-admissible burn-in range, of the ratio
// observed_sup * (gamma*L)^u / (2*K^2) on a 5000-point log sigma grid.
// Measured max 0.268955 (u=3, K=3, gamma=0.24, T=4096, S=1024); frozen
// with ~30% headroom.
constexpr double kResidualTailConstant = 0.35;

void check_sigma(double sigma, double gamma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::domain_error("spectral: sigma must be >= 0 and finite");
  if (gamma * sigma >= 1.0)
    throw std::domain_error("spectral: gamma*sigma must be < 1");
}

// Window averages of binomial(t, k) for t = S+1..T, via hockey-stick sums.
// Exact in double arithmetic at desk scale; relative error ~1e-16 beyond.
struct TaylorCoeffs {
  double c1, c2, c3;
};

TaylorCoeffs taylor_coeffs(const FilterParams& p) {
  const double T = static_cast<double>(p.T);
  const double S = static_cast<double>(p.S);
  const double L = static_cast<double>(p.L());
  const auto choose4 = [](double m) {
    return m * (m - 1.0) * (m - 2.0) * (m - 3.0) / 24.0;
  };
  TaylorCoeffs c;
  c.c1 = (T + S + 1.0) / 2.0;
  c.c2 = (T * (T * T - 1.0) - S * (S * S - 1.0)) / (6.0 * L);
  c.c3 = (choose4(T + 1.0) - choose4(S + 1.0)) / L;
  return c;
}

// Branch point for the series evaluation of the averaged filter/residual.
// Below it, the closed form's 1 - R cancellation costs more than the cubic
// truncation (~(gamma*sigma*(T+1))^4 / 24, i.e. < 5e-17 relative here);
// above it, 1 - R >= ~5e-5 so the cancellation loses < 5e-12 relative.
constexpr double kSeriesThreshold = 1e-4;

bool use_series(double x, const FilterParams& p) {
  return x * static_cast<double>(p.T + 1) < kSeriesThreshold;
}

// (1-x)^(S+1) * (1 - (1-x)^L) / (L*x) without cancellation; valid for x > 0.
double residual_product_form(double x, const FilterParams& p) {
  const double lg = std::log1p(-x);
  const double L = static_cast<double>(p.L());
  return std::exp(static_cast<double>(p.S + 1) * lg) *
         (-std::expm1(L * lg)) / (L * x);
}

}  // namespace

void FilterParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::domain_error("FilterParams: gamma must be positive and finite");
  if (T < 1) throw std::domain_error("FilterParams: T must be >= 1");
  if (S < 0 || S > T - 1)
    throw std::domain_error("FilterParams: need 0 <= S <= T-1");
}

void SpectralCurve::validate() const {
  if (sigmas.size() != values.size())
    throw std::domain_error("SpectralCurve: length mismatch");
  for (long i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas(i) > 0.0) || !std::isfinite(sigmas(i)))
      throw std::domain_error("SpectralCurve: sigmas must be positive finite");
    if (i > 0 && sigmas(i) > sigmas(i - 1))
      throw std::domain_error("SpectralCurve: sigmas must be nonincreasing");
    if (!std::isfinite(values(i)))
      throw std::domain_error("SpectralCurve: values must be finite");
  }
}

double gd_filter(double sigma, const FilterParams& p, long t) {
  p.validate();
  check_sigma(sigma, p.gamma);
  if (t < 1 || t > p.T)
    throw std::domain_error("gd_filter: t must be in [1, T]");
  const double x = p.gamma * sigma;
  const double td = static_cast<double>(t);
  if (td * x < 1e-8) {
    // Series of (1 - (1-x)^t)/sigma; covers sigma = 0 exactly (limit gamma*t).
    return p.gamma * td *
           (1.0 - (td - 1.0) * x / 2.0 + (td - 1.0) * (td - 2.0) * x * x / 6.0);
  }
  return -std::expm1(td * std::log1p(-x)) / sigma;
}

double gd_residual(double sigma, const FilterParams& p, long t) {
  p.validate();
  check_sigma(sigma, p.gamma);
  if (t < 0 || t > p.T)
    throw std::domain_error("gd_residual: t must be in [0, T]");
  if (t == 0) return 1.0;  // empty product
  const double x = p.gamma * sigma;
  if (x == 0.0) return 1.0;
  return std::exp(static_cast<double>(t) * std::log1p(-x));
}

double tail_residual(double sigma, const FilterParams& p) {
  p.validate();
  check_sigma(sigma, p.gamma);
  const double x = p.gamma * sigma;
  if (use_series(x, p)) {
    const TaylorCoeffs c = taylor_coeffs(p);
    return 1.0 - x * (c.c1 - x * (c.c2 - x * c.c3));
  }
  return residual_product_form(x, p);
}

double tail_filter(double sigma, const FilterParams& p) {
  p.validate();
  check_sigma(sigma, p.gamma);
  const double x = p.gamma * sigma;
  if (use_series(x, p)) {
    const TaylorCoeffs c = taylor_coeffs(p);
    return p.gamma * (c.c1 - x * (c.c2 - x * c.c3));
  }
  return (1.0 - residual_product_form(x, p)) / sigma;
}

Eigen::VectorXd apply_filter(const Spectrum& spectrum,
                             const Eigen::VectorXd& coeffs, FilterKind kind,
                             const FilterParams& p, long t) {
  if (coeffs.size() != spectrum.eigenvalues.size())
    throw std::invalid_argument("apply_filter: length mismatch");
  const bool per_iterate =
      kind == FilterKind::GdFilterT || kind == FilterKind::GdResidualT;
  if (per_iterate && t < 0)
    throw std::invalid_argument("apply_filter: per-iterate kind requires t");
  Eigen::VectorXd out(coeffs.size());
  for (long i = 0; i < coeffs.size(); ++i) {
    const double s = spectrum.eigenvalues(i);
    double f = 0.0;
    switch (kind) {
      case FilterKind::GdFilterT:
        f = gd_filter(s, p, t);
        break;
      case FilterKind::GdResidualT:
        f = gd_residual(s, p, t);
        break;
      case FilterKind::TailFilter:
        f = tail_filter(s, p);
        break;
      case FilterKind::TailResidual:
        f = tail_residual(s, p);
        break;
    }
    out(i) = f * coeffs(i);
  }
  return out;
}

SpectralCurve evaluate_curve(FilterKind kind, const FilterParams& p,
                             Eigen::VectorXd sigmas, long t) {
  SpectralCurve curve;
  curve.values.resize(sigmas.size());
  for (long i = 0; i < sigmas.size(); ++i) {
    const double s = sigmas(i);
    switch (kind) {
      case FilterKind::GdFilterT:
        curve.values(i) = gd_filter(s, p, t);
        break;
      case FilterKind::GdResidualT:
        curve.values(i) = gd_residual(s, p, t);
        break;
      case FilterKind::TailFilter:
        curve.values(i) = tail_filter(s, p);
        break;
      case FilterKind::TailResidual:
        curve.values(i) = tail_residual(s, p);
        break;
    }
  }
  curve.sigmas = std::move(sigmas);
  curve.validate();
  return curve;
}

SupGap filter_sup_gap(const FilterParams& p, double u,
                      const Eigen::VectorXd& sigma_grid, double K) {
  p.validate();
  if (!(u >= 0.0) || u > 1.0)
    throw std::domain_error("filter_sup_gap: u must be in [0, 1]");
  if (!(K >= 1.0)) throw std::domain_error("filter_sup_gap: K must be >= 1");
  if (static_cast<double>(p.S) * (K + 1.0) > (K - 1.0) * static_cast<double>(p.T))
    throw std::domain_error("filter_sup_gap: requires S <= (K-1)/(K+1)*T");
  SupGap gap;
  for (long i = 0; i < sigma_grid.size(); ++i) {
    const double s = sigma_grid(i);
    if (!(s > 0.0)) throw std::domain_error("filter_sup_gap: grid must be > 0");
    // At u = 1 evaluate sigma*G as 1 - R directly: it cannot round above 1,
    // whereas sigma * ((1-R)/sigma) can.
    const double v = (u == 1.0) ? 1.0 - tail_residual(s, p)
                                : std::pow(s, u) * tail_filter(s, p);
    gap.observed_sup = std::max(gap.observed_sup, v);
  }
  const double gl = p.gamma * static_cast<double>(p.L());
  gap.lemma_bound = (u == 1.0) ? 1.0 : K * std::pow(gl, 1.0 - u);
  return gap;
}

SupGap residual_sup_gap(const FilterParams& p, double u,
                        const Eigen::VectorXd& sigma_grid, double K) {
  p.validate();
  if (!(u >= 0.0)) throw std::domain_error("residual_sup_gap: u must be >= 0");
  if (!(K >= 1.0)) throw std::domain_error("residual_sup_gap: K must be >= 1");
  if (u > 1.0) {
    if (static_cast<double>(p.S) * (K + 1.0) >
        (K - 1.0) * static_cast<double>(p.T))
      throw std::domain_error("residual_sup_gap: u > 1 requires S <= (K-1)/(K+1)*T");
    if (static_cast<double>(p.T) > (K + 1.0) * static_cast<double>(p.S))
      throw std::domain_error("residual_sup_gap: u > 1 requires T <= (K+1)*S");
  }
  SupGap gap;
  for (long i = 0; i < sigma_grid.size(); ++i) {
    const double s = sigma_grid(i);
    if (!(s > 0.0))
      throw std::domain_error("residual_sup_gap: grid must be > 0");
    const double r = tail_residual(s, p);
    const double v = (u == 0.0) ? r : std::pow(s, u) * r;
    gap.observed_sup = std::max(gap.observed_sup, v);
  }
  const double gl = p.gamma * static_cast<double>(p.L());
  gap.lemma_bound = (u <= 1.0)
                        ? std::pow(gl, -u)
                        : 2.0 * kResidualTailConstant * K * K * std::pow(gl, -u);
  return gap;
}

Eigen::VectorXd log_grid(double lo, double hi, long n) {
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
    throw std::domain_error("log_grid: need 0 < lo <= hi, finite");
  if (n < 2) throw std::domain_error("log_grid: need n >= 2");
  Eigen::VectorXd g(n);
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (long i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    g(i) = std::exp(llo + f * (lhi - llo));
  }
  g(0) = lo;  // endpoints exact
  g(n - 1) = hi;
  return g;
}

}  // namespace tailsgd
