#pragma once

#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "siamte/errors.hpp"
#include "siamte/tensor.hpp"

namespace siamte {

namespace detail {

/// Circular normalized cross-correlation over all 2-D shifts via FFT:
/// rho(s) = sum_x a0(x) b0(x+s) / (||a0|| ||b0||), a0, b0 mean-centered.
inline Tensor circular_ncc(const Tensor& a, const Tensor& b) {
  if (a.c != 1 || b.c != 1) throw ConfigError("correlation expects single-channel inputs");
  if (!a.same_shape(b)) throw ConfigError("correlation shape mismatch");
  int h = a.h, w = a.w;
  size_t n = size_t(h) * w;

  std::vector<double> a0(n), b0(n);
  double ma = a.mean(), mb = b.mean();
  double na2 = 0, nb2 = 0;
  for (size_t i = 0; i < n; ++i) {
    a0[i] = a.data[i] - ma;
    b0[i] = b.data[i] - mb;
    na2 += a0[i] * a0[i];
    nb2 += b0[i] * b0[i];
  }
  double norm = std::sqrt(na2) * std::sqrt(nb2);
  if (!(norm > 0)) throw NumericError("zero-variance input");

  int wc = w / 2 + 1;
  std::vector<std::complex<double>> A(size_t(h) * wc), B(size_t(h) * wc);
  // FFTW's planner is not thread-safe; execution on distinct plans is.
  static std::mutex planner_mutex;
  auto plan_r2c = [&](double* in, std::complex<double>* out) {
    std::lock_guard<std::mutex> lock(planner_mutex);
    return fftw_plan_dft_r2c_2d(h, w, in, reinterpret_cast<fftw_complex*>(out), FFTW_ESTIMATE);
  };
  auto destroy = [&](fftw_plan p) {
    std::lock_guard<std::mutex> lock(planner_mutex);
    fftw_destroy_plan(p);
  };
  fftw_plan pa = plan_r2c(a0.data(), A.data());
  fftw_execute(pa);
  destroy(pa);
  fftw_plan pb = plan_r2c(b0.data(), B.data());
  fftw_execute(pb);
  destroy(pb);

  for (size_t i = 0; i < A.size(); ++i) A[i] = std::conj(A[i]) * B[i];
  std::vector<double> c(n);
  fftw_plan pc;
  {
    std::lock_guard<std::mutex> lock(planner_mutex);
    pc = fftw_plan_dft_c2r_2d(h, w, reinterpret_cast<fftw_complex*>(A.data()), c.data(),
                              FFTW_ESTIMATE);
  }
  fftw_execute(pc);
  destroy(pc);

  Tensor rho(1, h, w);
  double scale = 1.0 / (double(n) * norm);
  for (size_t i = 0; i < n; ++i) rho.data[i] = c[i] * scale;
  return rho;
}

}  // namespace detail

struct PceResult {
  double pce = 0.0;
  double peak_corr = 0.0;      // correlation at the aligned (zero) shift
  int argmax_y = 0, argmax_x = 0;  // location of the global correlation maximum
};

/// Peak-to-correlation energy: the squared correlation at the aligned shift
/// over the mean squared correlation elsewhere, excluding a (2r+1)^2
/// wrap-around window around the alignment. Residual and fingerprint share
/// the pixel grid, so the expected peak sits at the zero shift; under that
/// convention an unrelated pair scores a chi-square-like null (typically
/// well below 10) instead of the maximum over all shifts. Invariant to
/// positive rescaling of either input (bit-exact for power-of-two factors).
inline PceResult pce_detail(const Tensor& residual, const Tensor& fingerprint,
                            int exclusion_radius = 5) {
  if (exclusion_radius < 0) throw ConfigError("exclusion radius must be >= 0");
  Tensor rho = detail::circular_ncc(fingerprint, residual);
  int h = rho.h, w = rho.w;
  size_t n = rho.size();

  PceResult out;
  out.peak_corr = rho.data[0];
  size_t best = 0;
  for (size_t i = 1; i < n; ++i)
    if (rho.data[i] > rho.data[best]) best = i;
  out.argmax_y = int(best) / w;
  out.argmax_x = int(best) % w;

  std::vector<char> excluded(n, 0);
  size_t n_excl = 0;
  for (int dy = -exclusion_radius; dy <= exclusion_radius; ++dy)
    for (int dx = -exclusion_radius; dx <= exclusion_radius; ++dx) {
      int y = (dy % h + h) % h;
      int x = (dx % w + w) % w;
      char& e = excluded[size_t(y) * w + x];
      n_excl += !e;
      e = 1;
    }
  if (n_excl >= n) throw ConfigError("exclusion window covers the whole correlation plane");

  double energy = 0.0;
  for (size_t i = 0; i < n; ++i)
    if (!excluded[i]) energy += rho.data[i] * rho.data[i];
  if (!(energy > 0)) throw NumericError("degenerate correlation");
  out.pce = out.peak_corr * out.peak_corr / (energy / double(n - n_excl));
  return out;
}

inline double pce(const Tensor& residual, const Tensor& fingerprint, int exclusion_radius = 5) {
  return pce_detail(residual, fingerprint, exclusion_radius).pce;
}

}  // namespace siamte
