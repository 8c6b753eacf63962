#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace tailsgd {

// Eigenvalues of the population second-moment operator in its diagonalizing
// basis. Everything downstream works coordinatewise in this basis.
struct Spectrum {
  Eigen::VectorXd eigenvalues;      // strictly positive, nonincreasing
  std::optional<double> decay_nu;   // generating decay exponent, if any
  double kappa_sq = 0.0;            // operational step-size bound, default trace

  long dim() const { return static_cast<long>(eigenvalues.size()); }
  double trace() const { return eigenvalues.sum(); }
  double sigma_max() const { return eigenvalues(0); }
  double sigma_min() const { return eigenvalues(eigenvalues.size() - 1); }
  double trace_pow(double alpha) const;  // sum of eigenvalue^alpha

  void validate() const;
  // Validates and fills kappa_sq = trace. The trace is the mean of the squared
  // covariate norm, the deterministic proxy used for every step-size guard
  // (Gaussian covariates are unbounded, so no almost-sure bound exists).
  static Spectrum from_eigenvalues(Eigen::VectorXd eigenvalues,
                                   std::optional<double> decay_nu = std::nullopt);
};

// Power-law spectrum: eigenvalue_i = i^(-1/nu), i = 1..d, nu in (0, 1].
Spectrum make_spectrum(long d, double nu);

// Target coefficients in the eigenbasis together with the smoothness data
// (coeffs_i = eigenvalue_i^r * base_i, |base| <= R).
struct SourceVector {
  Eigen::VectorXd coeffs;
  double r = 0.0;
  double R = 0.0;
};

// coeffs_i = eigenvalue_i^r (all-ones base), R = sqrt(d).
SourceVector make_source(const Spectrum& spectrum, double r);

struct Problem {
  Spectrum spectrum;
  SourceVector source;
  double noise_std = 1.0;
  // Almost-sure label bound; absent for Gaussian noise (which has none).
  std::optional<double> label_bound_M;

  Eigen::VectorXd h() const;  // eigenvalue_i * coeffs_i, the normal-equation rhs
  void validate() const;
};

// Sampled (x, y) pairs, stored with samples as matrix columns (column-major,
// so one sample is contiguous). Regeneration from (seed, generator_id,
// problem) is bit-identical.
struct Dataset {
  long n = 0;
  Eigen::MatrixXd xs;  // d x n, sample j in column j
  Eigen::VectorXd ys;  // n
  std::uint64_t seed = 0;
  std::string generator_id;
};

// Coordinates x_i ~ N(0, eigenvalue_i) independently; y = <w, x> + noise_std*z.
// Draw order per sample: the d coordinate normals (ascending i), then the
// noise normal. One derived stream per dataset.
Dataset sample_dataset(const Problem& problem, long n, std::uint64_t seed);

struct EmpiricalMoments {
  Eigen::MatrixXd sigma_hat;  // (1/n) sum_j x_j x_j^T
  Eigen::VectorXd h_hat;      // (1/n) sum_j y_j x_j
};

EmpiricalMoments empirical_moments(const Dataset& dataset);

// Tr[(Sigma + lambda)^{-1} Sigma] = sum_i s_i / (s_i + lambda), lambda > 0.
double effective_dimension(const Spectrum& spectrum, double lambda);

// sum_i s_i (w_i - w*_i)^2, the population squared prediction error above
// the optimum.
double excess_risk(const Spectrum& spectrum, const Eigen::VectorXd& w_coeffs,
                   const SourceVector& source);

// Debug export: header "sample_index,x_1..x_d,y", one row per sample.
void write_dataset_csv(const Dataset& dataset, std::ostream& out);

}  // namespace tailsgd
