#include "hprobe/fiber/propagation.hpp"

#include <fftw3.h>

#include <cmath>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/core/fftw_lock.hpp"

namespace hprobe::fiber {

using constants::pi;

fdtd::FieldMap2D propagate(const fdtd::FieldMap2D& field, double dz, double medium_index) {
  field.validate();
  const std::size_t n = field.coordinates.size();
  if (n < 2) throw ValidationError("cannot propagate a field with fewer than two samples");
  if (dz == 0.0) return field;
  const double dx = (field.coordinates.back() - field.coordinates.front()) / static_cast<double>(n - 1);
  std::size_t nfft = 1;
  while (nfft < 4 * n) nfft <<= 1;
  fftw_complex* buf = fftw_alloc_complex(nfft);
  std::unique_lock planner_lock(fftw_planner_mutex());
  fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(nfft), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(nfft), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  planner_lock.unlock();
  // centered embedding so the padding absorbs lateral walk-off on both sides
  const std::size_t off = (nfft - n) / 2;
  for (std::size_t i = 0; i < nfft; ++i) {
    const bool in = i >= off && i < off + n;
    buf[i][0] = in ? field.amplitude[i - off].real() : 0.0;
    buf[i][1] = in ? field.amplitude[i - off].imag() : 0.0;
  }
  fftw_execute(fwd);
  const double k = 2.0 * pi * medium_index / field.wavelength();
  for (std::size_t i = 0; i < nfft; ++i) {
    const long bin = i < nfft / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(nfft);
    const double kx = 2.0 * pi * static_cast<double>(bin) / (static_cast<double>(nfft) * dx);
    std::complex<double> h{0.0, 0.0};
    if (std::abs(kx) < k) h = std::polar(1.0 / static_cast<double>(nfft), std::sqrt(k * k - kx * kx) * dz);
    const std::complex<double> v = std::complex<double>(buf[i][0], buf[i][1]) * h;
    buf[i][0] = v.real();
    buf[i][1] = v.imag();
  }
  fftw_execute(bwd);
  fdtd::FieldMap2D out = field;
  out.plane_position = field.plane_position + dz;
  for (std::size_t i = 0; i < n; ++i) out.amplitude[i] = {buf[i + off][0], buf[i + off][1]};
  planner_lock.lock();
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  fftw_free(buf);
  return out;
}

double gaussian_mismatch_1d(double w1, double w2, double z, double wavelength) {
  if (!(w1 > 0.0) || !(w2 > 0.0)) throw ValidationError("Gaussian waists must be > 0");
  const double a = w1 / w2 + w2 / w1;
  const double b = wavelength * z / (pi * w1 * w2);
  return 2.0 / std::sqrt(a * a + b * b);
}

}  // namespace hprobe::fiber
