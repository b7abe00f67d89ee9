#include <algorithm>
#include <cmath>
#include <sstream>

#include "hprobe/core/error.hpp"
#include "hprobe/core/least_squares.hpp"
#include "hprobe/spectra/spectra.hpp"

namespace hprobe::spectra {

LorentzianFit fit_lorentzian(const ReflectionSpectrum& s) {
  s.validate();
  const auto& lam = s.wavelengths;
  const auto& y = s.reflectance;
  const std::size_t n = lam.size();
  if (n < 8) throw ValidationError("spectrum too short for a Lorentzian fit");

  const auto imin = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  std::vector<double> sorted(y);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t top = std::max<std::size_t>(1, n / 10);
  double base = 0.0;
  for (std::size_t i = n - top; i < n; ++i) base += sorted[i];
  base /= static_cast<double>(top);
  const double ymin = y[imin];
  if (!(base > 0.0) || ymin / base > 0.95) throw NumericalError("no resonance dip detected (min/baseline > 0.95)");

  // half-depth crossings for the initial linewidth
  const double half = 0.5 * (base + ymin);
  std::size_t a = imin, b = imin;
  while (a > 0 && y[a] < half) --a;
  while (b + 1 < n && y[b] < half) ++b;
  const double fwhm0 = std::abs(lam[b] - lam[a]);
  if (!(fwhm0 > 0.0)) throw ValidationError("dip narrower than the sample spacing");
  const double span = std::abs(lam.back() - lam.front());
  if (span < 5.0 * fwhm0) throw ValidationError("spectrum must span at least 5 linewidths");
  std::size_t inside = 0;
  for (double l : lam)
    if (std::abs(l - lam[imin]) <= 0.5 * fwhm0) ++inside;
  if (inside < 20) throw ValidationError("need >= 20 samples per linewidth near the dip");

  const double l_init = lam[imin];
  const double q_init = l_init / fwhm0;
  const double rho0 = std::clamp(0.5 * (1.0 - std::sqrt(std::max(0.0, ymin / base))), 0.05, 0.45);

  // p = (u, q, rho, B): lambda0 = l_init + u fwhm0, Q = q q_init
  auto fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const double l0 = l_init + p(0) * fwhm0, q = p(1) * q_init, rho = p(2), bl = p(3);
    const double am = 1.0 - 2.0 * rho, aa = am * am;
    r.resize(static_cast<long>(n));
    jac.resize(static_cast<long>(n), 4);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = 2.0 * q * (l0 / lam[i] - 1.0);
      const double d = 1.0 + x * x;
      const double rr = (aa + x * x) / d;
      const double drdx = 2.0 * x * (1.0 - aa) / (d * d);
      const long k = static_cast<long>(i);
      r(k) = bl * rr - y[i];
      jac(k, 0) = bl * drdx * (2.0 * q / lam[i]) * fwhm0;
      jac(k, 1) = bl * drdx * (x / q) * q_init;
      jac(k, 2) = bl * (-4.0 * am) / d;
      jac(k, 3) = rr;
    }
  };
  Eigen::VectorXd p0(4);
  p0 << 0.0, 1.0, rho0, base;
  const auto res = lsq::levenberg_marquardt(fn, p0, lsq::Options{200, 1e-10, 1e-3});
  if (!res.converged) {
    std::ostringstream os;
    os << "Lorentzian fit did not converge after " << res.iterations << " iterations (rms residual "
       << res.rms_residual << ")";
    throw NumericalError(os.str());
  }
  LorentzianFit f;
  f.resonance_wavelength = l_init + res.params(0) * fwhm0;
  f.quality_factor = std::abs(res.params(1) * q_init);
  const double rho = res.params(2);
  f.coupling_ratio = rho > 0.5 ? 1.0 - rho : rho;
  f.baseline = res.params(3);
  f.rms_residual = res.rms_residual;
  f.iterations = res.iterations;
  return f;
}

}  // namespace hprobe::spectra
