#include "tailsgd/model.hpp"

#include <cmath>
#include <stdexcept>

#include "tailsgd/csv.hpp"
#include "tailsgd/rng.hpp"
#include "tailsgd/version.hpp"

namespace tailsgd {

double Spectrum::trace_pow(double alpha) const {
  double acc = 0.0;
  for (long i = 0; i < eigenvalues.size(); ++i) acc += std::pow(eigenvalues(i), alpha);
  return acc;
}

void Spectrum::validate() const {
  if (eigenvalues.size() == 0) throw std::domain_error("Spectrum: empty");
  for (long i = 0; i < eigenvalues.size(); ++i) {
    const double s = eigenvalues(i);
    if (!(s > 0.0) || !std::isfinite(s))
      throw std::domain_error("Spectrum: eigenvalues must be positive and finite");
    if (i > 0 && s > eigenvalues(i - 1))
      throw std::domain_error("Spectrum: eigenvalues must be nonincreasing");
  }
  if (!(kappa_sq > 0.0) || !std::isfinite(kappa_sq))
    throw std::domain_error("Spectrum: kappa_sq must be positive and finite");
}

Spectrum Spectrum::from_eigenvalues(Eigen::VectorXd eigenvalues,
                                    std::optional<double> decay_nu) {
  Spectrum s;
  s.eigenvalues = std::move(eigenvalues);
  s.decay_nu = decay_nu;
  s.kappa_sq = s.eigenvalues.size() ? s.eigenvalues.sum() : 0.0;
  s.validate();
  return s;
}

Spectrum make_spectrum(long d, double nu) {
  if (d < 1) throw std::domain_error("make_spectrum: d must be >= 1");
  if (!(nu > 0.0) || nu > 1.0)
    throw std::domain_error("make_spectrum: nu must be in (0, 1]");
  Eigen::VectorXd ev(d);
  for (long i = 0; i < d; ++i)
    ev(i) = std::pow(static_cast<double>(i + 1), -1.0 / nu);
  return Spectrum::from_eigenvalues(std::move(ev), nu);
}

SourceVector make_source(const Spectrum& spectrum, double r) {
  spectrum.validate();
  if (!(r >= 0.0) || !std::isfinite(r))
    throw std::domain_error("make_source: r must be >= 0 and finite");
  SourceVector src;
  src.r = r;
  src.R = std::sqrt(static_cast<double>(spectrum.dim()));
  src.coeffs.resize(spectrum.dim());
  for (long i = 0; i < spectrum.dim(); ++i)
    src.coeffs(i) = std::pow(spectrum.eigenvalues(i), r);
  return src;
}

Eigen::VectorXd Problem::h() const {
  return spectrum.eigenvalues.cwiseProduct(source.coeffs);
}

void Problem::validate() const {
  spectrum.validate();
  if (source.coeffs.size() != spectrum.dim())
    throw std::domain_error("Problem: spectrum/source length mismatch");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw std::domain_error("Problem: noise_std must be >= 0");
}

Dataset sample_dataset(const Problem& problem, long n, std::uint64_t seed) {
  problem.validate();
  if (n < 1) throw std::domain_error("sample_dataset: n must be >= 1");
  const long d = problem.spectrum.dim();
  const Eigen::VectorXd sqrt_ev = problem.spectrum.eigenvalues.cwiseSqrt();

  Dataset data;
  data.n = n;
  data.seed = seed;
  data.generator_id = kGeneratorId;
  data.xs.resize(d, n);
  data.ys.resize(n);

  Rng rng(derive_stream(seed, "dataset", 0));
  for (long j = 0; j < n; ++j) {
    for (long i = 0; i < d; ++i) data.xs(i, j) = sqrt_ev(i) * rng.normal();
    data.ys(j) = problem.source.coeffs.dot(data.xs.col(j)) +
                 problem.noise_std * rng.normal();
  }
  return data;
}

EmpiricalMoments empirical_moments(const Dataset& dataset) {
  if (dataset.n < 1 || dataset.xs.cols() != dataset.n ||
      dataset.ys.size() != dataset.n)
    throw std::domain_error("empirical_moments: empty or inconsistent dataset");
  const double inv_n = 1.0 / static_cast<double>(dataset.n);
  EmpiricalMoments m;
  m.sigma_hat = (dataset.xs * dataset.xs.transpose()) * inv_n;
  m.h_hat = (dataset.xs * dataset.ys) * inv_n;
  return m;
}

double effective_dimension(const Spectrum& spectrum, double lambda) {
  spectrum.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::domain_error("effective_dimension: lambda must be > 0");
  double acc = 0.0;
  for (long i = 0; i < spectrum.dim(); ++i) {
    const double s = spectrum.eigenvalues(i);
    acc += s / (s + lambda);
  }
  return acc;
}

double excess_risk(const Spectrum& spectrum, const Eigen::VectorXd& w_coeffs,
                   const SourceVector& source) {
  if (w_coeffs.size() != spectrum.dim() || source.coeffs.size() != spectrum.dim())
    throw std::invalid_argument("excess_risk: length mismatch");
  double acc = 0.0;
  for (long i = 0; i < spectrum.dim(); ++i) {
    const double diff = w_coeffs(i) - source.coeffs(i);
    acc += spectrum.eigenvalues(i) * diff * diff;
  }
  return acc;
}

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
  const long d = dataset.xs.rows();
  out << "sample_index";
  for (long i = 0; i < d; ++i) out << ",x_" << (i + 1);
  out << ",y\n";
  for (long j = 0; j < dataset.n; ++j) {
    out << j;
    for (long i = 0; i < d; ++i) out << ',' << format_double(dataset.xs(i, j));
    out << ',' << format_double(dataset.ys(j)) << '\n';
  }
}

}  // namespace tailsgd
