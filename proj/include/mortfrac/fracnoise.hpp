#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mortfrac/rng.hpp"

namespace mortfrac {

struct NoiseSpec {
  double hurst = 0.5;
  double alpha = 0.0;
  std::size_t n_steps = 1;
  double horizon = 1.0;
  std::uint64_t seed = 0;

  double dt() const { return horizon / static_cast<double>(n_steps); }
  void validate() const;
};

struct Path {
  std::vector<double> times;
  std::vector<double> values;
  std::uint64_t seed = 0;
};

/// Stationary increments on a uniform grid (not cumulated).
struct Increments {
  double dt = 0.0;
  std::vector<double> values;
  std::uint64_t seed = 0;
};

double fbm_cov(double s, double t, double hurst);
double mfbm_cov(double s, double t, double hurst, double alpha);
/// Autocorrelation of unit-step fGn at lag k >= 1.
double fgn_autocorr(std::size_t k, double hurst);
/// Autocovariance of unit-step fGn, defined for k = 0 as well.
double fgn_autocov(std::size_t k, double hurst);

enum class SamplerMethod { Auto, Circulant, Cholesky };

/// Exact sampler for n consecutive fGn increments with step dt. Holds the
/// circulant eigenvalues or the Cholesky factor; sample() is thread-safe.
class FgnSampler {
 public:
  FgnSampler(double hurst, std::size_t n, double dt, SamplerMethod method = SamplerMethod::Auto);
  ~FgnSampler();
  FgnSampler(const FgnSampler&) = delete;
  FgnSampler& operator=(const FgnSampler&) = delete;

  void sample(rng::NormalStream& z, std::span<double> out) const;
  std::size_t size() const { return n_; }
  SamplerMethod method() const { return method_; }
  double min_embedding_eigenvalue() const { return min_eig_; }

 private:
  struct Fft;
  double hurst_;
  std::size_t n_;
  double scale_;
  SamplerMethod method_;
  double min_eig_ = 0.0;
  std::vector<double> sqrt_lambda_;
  Eigen::MatrixXd chol_;
  std::unique_ptr<Fft> fft_;
};

/// Lower Cholesky factor with tolerance 1e-10 on non-positive pivots.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& cov, double tol = 1e-10);

Increments simulate_fgn(const NoiseSpec& spec, SamplerMethod method = SamplerMethod::Auto);
Path simulate_mfbm(const NoiseSpec& spec, SamplerMethod method = SamplerMethod::Auto);

}  // namespace mortfrac
