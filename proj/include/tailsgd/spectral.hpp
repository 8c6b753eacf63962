#pragma once

#include <Eigen/Dense>

#include "tailsgd/model.hpp"

namespace tailsgd {

// Step-size and averaging-window parameters of the iteration filter family.
// The window averages iterates t = S+1 .. T; L = T - S is the tail length.
struct FilterParams {
  double gamma = 0.0;  // step size, > 0 and finite
  long T = 0;          // iteration count, >= 1
  long S = 0;          // burn-in cut, 0 <= S <= T-1

  long L() const { return T - S; }
  void validate() const;  // throws std::domain_error on violation
};

// Filter or residual values sampled along a grid of eigenvalue arguments.
struct SpectralCurve {
  Eigen::VectorXd sigmas;  // strictly positive, nonincreasing
  Eigen::VectorXd values;
  void validate() const;
};

enum class FilterKind { GdFilterT, TailFilter, GdResidualT, TailResidual };

// Scalar calculus. All four accept sigma = 0 and return the pseudoinverse
// limit (gamma*t, 1, gamma*(S+T+1)/2, 1 respectively); sigma < 0 or
// gamma*sigma >= 1 is a domain error.
//
// t-step filter (1 - (1-gamma*sigma)^t) / sigma, 1 <= t <= T.
double gd_filter(double sigma, const FilterParams& p, long t);
// t-step residual (1-gamma*sigma)^t, 0 <= t <= T (t = 0 is the identity).
double gd_residual(double sigma, const FilterParams& p, long t);
// Window-averaged filter G: the average of gd_filter over t = S+1..T,
// evaluated in closed form.
double tail_filter(double sigma, const FilterParams& p);
// Window-averaged residual R = 1 - sigma*G, in closed form; value in [0, 1].
double tail_residual(double sigma, const FilterParams& p);

// Componentwise application of the chosen scalar on a spectrum. t is required
// (>= 0) for the per-iterate kinds and ignored for the window-averaged ones.
Eigen::VectorXd apply_filter(const Spectrum& spectrum,
                             const Eigen::VectorXd& coeffs, FilterKind kind,
                             const FilterParams& p, long t = -1);

// Samples a scalar kind along a positive nonincreasing grid.
SpectralCurve evaluate_curve(FilterKind kind, const FilterParams& p,
                             Eigen::VectorXd sigmas, long t = -1);

// A measured grid supremum next to its proven envelope.
struct SupGap {
  double observed_sup = 0.0;
  double lemma_bound = 0.0;
};

// Grid sup of sigma^u * G(sigma) vs K * (gamma*L)^(1-u), u in [0, 1].
// Requires S <= (K-1)/(K+1) * T. The u = 1 envelope is the exact value 1.
SupGap filter_sup_gap(const FilterParams& p, double u,
                      const Eigen::VectorXd& sigma_grid, double K);

// Grid sup of sigma^u * R(sigma). For u in [0, 1] the envelope is
// (gamma*L)^(-u), with no tolerance. For u > 1 it is
// 2 * C * K^2 * (gamma*L)^(-u) with an empirically calibrated constant C,
// and requires both S <= (K-1)/(K+1)*T and T <= (K+1)*S.
SupGap residual_sup_gap(const FilterParams& p, double u,
                        const Eigen::VectorXd& sigma_grid, double K);

// Geometric grid of n points from lo to hi inclusive (lo, hi > 0, n >= 2).
Eigen::VectorXd log_grid(double lo, double hi, long n);

}  // namespace tailsgd
