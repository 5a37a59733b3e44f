#include "mortfrac/fracnoise.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "mortfrac/errors.hpp"

namespace mortfrac {

namespace {
void check_hurst(double h) {
  if (!(h > 0.0 && h < 1.0)) throw DomainError("hurst must lie in (0,1), got " + std::to_string(h));
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void NoiseSpec::validate() const {
  check_hurst(hurst);
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be nonnegative");
  if (n_steps < 1) throw DomainError("n_steps must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive");
}

double fbm_cov(double s, double t, double hurst) {
  check_hurst(hurst);
  if (s < 0.0 || t < 0.0) throw DomainError("fbm_cov: negative time");
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(s - t), h2));
}

double mfbm_cov(double s, double t, double hurst, double alpha) {
  return alpha * alpha * std::min(s, t) + fbm_cov(s, t, hurst);
}

double fgn_autocov(std::size_t k, double hurst) {
  check_hurst(hurst);
  if (k == 0) return 1.0;
  const double h2 = 2.0 * hurst;
  const double kd = static_cast<double>(k);
  return 0.5 * (std::pow(kd + 1.0, h2) - 2.0 * std::pow(kd, h2) + std::pow(kd - 1.0, h2));
}

double fgn_autocorr(std::size_t k, double hurst) {
  if (k == 0) throw DomainError("fgn_autocorr: lag must be >= 1 (lag 0 is the unit variance)");
  return fgn_autocov(k, hurst);
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& cov, double tol) {
  const Eigen::Index n = cov.rows();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = cov(j, j) - L.row(j).head(j).squaredNorm();
    if (d < -tol) throw NumericalError("Cholesky: non-positive pivot " + std::to_string(d) + " at row " + std::to_string(j));
    if (d <= tol) continue;
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      L(i, j) = (cov(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / ljj;
    }
  }
  return L;
}

struct FgnSampler::Fft {
  std::size_t m = 0;
  fftw_plan plan = nullptr;
  ~Fft() {
    if (plan) {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

FgnSampler::FgnSampler(double hurst, std::size_t n, double dt, SamplerMethod method)
    : hurst_(hurst), n_(n), scale_(std::pow(dt, hurst)), method_(method) {
  check_hurst(hurst);
  if (n == 0) throw DomainError("FgnSampler: n must be positive");
  if (!(dt > 0.0)) throw DomainError("FgnSampler: dt must be positive");

  if (method_ != SamplerMethod::Cholesky && n >= 2) {
    const std::size_t m = 2 * n;
    fftw_complex* buf = fftw_alloc_complex(m);
    for (std::size_t k = 0; k <= n; ++k) {
      buf[k][0] = fgn_autocov(k, hurst);
      buf[k][1] = 0.0;
    }
    for (std::size_t k = n + 1; k < m; ++k) {
      buf[k][0] = buf[m - k][0];
      buf[k][1] = 0.0;
    }
    auto fft = std::make_unique<Fft>();
    fft->m = m;
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_plan eig_plan = fftw_plan_dft_1d(static_cast<int>(m), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
      fftw_execute(eig_plan);
      fftw_destroy_plan(eig_plan);
    }
    sqrt_lambda_.resize(m);
    min_eig_ = buf[0][0];
    bool ok = true;
    for (std::size_t k = 0; k < m; ++k) {
      double lam = buf[k][0];
      min_eig_ = std::min(min_eig_, lam);
      if (lam < -1e-8) ok = false;
      if (lam < 0.0) lam = 0.0;
      sqrt_lambda_[k] = std::sqrt(lam / static_cast<double>(m));
    }
    if (ok) {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fft->plan = fftw_plan_dft_1d(static_cast<int>(m), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_free(buf);
    if (ok) {
      fft_ = std::move(fft);
      method_ = SamplerMethod::Circulant;
    } else if (method_ == SamplerMethod::Circulant) {
      throw NumericalError("circulant embedding is not nonnegative definite (min eigenvalue " +
                           std::to_string(min_eig_) + ")");
    } else {
      sqrt_lambda_.clear();
    }
  }

  if (!fft_) {
    method_ = SamplerMethod::Cholesky;
    Eigen::MatrixXd cov(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) cov(i, j) = fgn_autocov(i > j ? i - j : j - i, hurst);
    chol_ = cholesky_lower(cov);
  }
}

FgnSampler::~FgnSampler() = default;

void FgnSampler::sample(rng::NormalStream& z, std::span<double> out) const {
  if (out.size() != n_) throw DomainError("FgnSampler::sample: output size mismatch");
  if (method_ == SamplerMethod::Circulant) {
    const std::size_t m = fft_->m;
    // fftw_malloc alignment matches the planning buffer, as required by the new-array execute.
    struct Buf {
      fftw_complex* p = nullptr;
      std::size_t m = 0;
      ~Buf() { fftw_free(p); }
    };
    thread_local Buf buf;
    if (buf.m != m) {
      fftw_free(buf.p);
      buf.p = fftw_alloc_complex(m);
      buf.m = m;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double re = z();
      const double im = z();
      buf.p[k][0] = sqrt_lambda_[k] * re;
      buf.p[k][1] = sqrt_lambda_[k] * im;
    }
    fftw_execute_dft(fft_->plan, buf.p, buf.p);
    for (std::size_t k = 0; k < n_; ++k) out[k] = scale_ * buf.p[k][0];
    return;
  }
  Eigen::VectorXd g(n_);
  for (std::size_t k = 0; k < n_; ++k) g[k] = z();
  const Eigen::VectorXd x = chol_.triangularView<Eigen::Lower>() * g;
  for (std::size_t k = 0; k < n_; ++k) out[k] = scale_ * x[k];
}

Increments simulate_fgn(const NoiseSpec& spec, SamplerMethod method) {
  spec.validate();
  FgnSampler sampler(spec.hurst, spec.n_steps, spec.dt(), method);
  rng::NormalStream z(spec.seed, 0, rng::Tag::B1);
  Increments inc;
  inc.dt = spec.dt();
  inc.seed = spec.seed;
  inc.values.resize(spec.n_steps);
  sampler.sample(z, inc.values);
  return inc;
}

Path simulate_mfbm(const NoiseSpec& spec, SamplerMethod method) {
  const Increments frac = simulate_fgn(spec, method);
  rng::NormalStream w(spec.seed, 0, rng::Tag::W1);
  const double sd = std::sqrt(spec.dt());
  Path p;
  p.seed = spec.seed;
  p.times.resize(spec.n_steps + 1);
  p.values.resize(spec.n_steps + 1);
  p.values[0] = 0.0;
  for (std::size_t k = 0; k <= spec.n_steps; ++k) p.times[k] = spec.horizon * static_cast<double>(k) / static_cast<double>(spec.n_steps);
  for (std::size_t k = 0; k < spec.n_steps; ++k) {
    const double dw = sd * w();
    p.values[k + 1] = p.values[k] + spec.alpha * dw + frac.values[k];
  }
  return p;
}

}  // namespace mortfrac
