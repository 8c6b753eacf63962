#pragma once

#include <utility>
#include <vector>

#include "tailsgd/model.hpp"
#include "tailsgd/spectral.hpp"

namespace tailsgd {

// Exact deterministic approximation error of the window-averaged iteration:
// sum_i s_i * R(s_i)^2 * w*_i^2.
double approx_error(const Spectrum& spectrum, const SourceVector& source,
                    const FilterParams& p);

// The three excess-risk bound terms, reported raw (the analysis hides
// absolute constants, so these are shape oracles, not certified envelopes).
struct BoundReport {
  double approx_term = 0.0;         // deterministic approximation error
  double sample_term = 0.0;         // N(1/(gamma L)) / n
  double computational_term = 0.0;  // gamma Tr[Sigma^alpha] / (b (gamma L)^(1-alpha))
  double alpha = 1.0;
  double total = 0.0;
  // n >= 16 kappa^2 gamma L max(1, N(1/gamma L)); reported, never enforced.
  bool n_condition_ok = false;
};

BoundReport bound_terms(const Spectrum& spectrum, const SourceVector& source,
                        const FilterParams& p, long b, long n, double alpha);

// Parameter schedule for a given sample size. Variants:
//   a: b=1, T=n, gamma = n^{-(2r+nu)/(2r+1+nu)}   (one pass)
//   b: b=round(n^{(2r+nu)/(2r+1+nu)}), T=round(n^{1/(2r+1+nu)}), gamma const
//   c: b=n, T as in (b), gamma const              (multi-pass)
// gamma is clipped to 0.9/(4 kappa_sq) whenever the formula exceeds the
// step-size guard (the constant choice for b/c starts from 1.0).
// r <= 1/2 keeps S=0; r > 1/2 uses S = floor(T/2) (window ratio K=3).
struct ScheduleChoice {
  char variant = 'a';
  long n = 0;
  double r = 0.0;
  double nu = 1.0;
  double gamma = 0.0;
  long batch_size = 1;
  long L = 0;
  long T = 0;
  long S = 0;
  double K = 1.0;

  long passes() const;  // ceil(batch_size * T / n)
  FilterParams filter_params() const { return FilterParams{gamma, T, S}; }
};

ScheduleChoice schedule(char variant, long n, double r, double nu,
                        double kappa_sq);

enum class AveragingMode { Uniform, TailHalf };

// One point per tail length: x = gamma*T, y = the worst-case residual risk at
// smoothness r, i.e. sup over admissible sigma of sigma^(2r+1) * R(sigma)^2.
// The sup runs over a dense log grid spanning [sigma_min(spectrum), 0.99/gamma]
// plus the eigenvalues themselves, so finite-rank spectra keep their geometric
// decay. Window per grid value l: Uniform -> (S=0, T=l); TailHalf ->
// (S=l, T=2l), i.e. S = floor(T/2) with tail length l in both modes.
struct SaturationPoint {
  double gamma_T = 0.0;
  double residual_risk = 0.0;
};

std::vector<SaturationPoint> saturation_curves(
    const Spectrum& spectrum, double r, double gamma,
    const std::vector<long>& tail_lengths, AveragingMode mode);

// Ordinary least-squares slope of log y against log x; needs >= 2 points,
// all coordinates positive.
double slope_fit(const std::vector<std::pair<double, double>>& points);

}  // namespace tailsgd
