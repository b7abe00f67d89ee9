#include "hprobe/spin/cpmg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/core/rng.hpp"

namespace hprobe::spin {

using constants::pi;
using cplx = std::complex<double>;

void NoiseBath::validate() const {
  if (!(sigma >= 0.0)) throw ValidationError("bath sigma must be >= 0");
  if (kind == Kind::ornstein_uhlenbeck && !(correlation_time > 0.0))
    throw ValidationError("OU correlation_time must be > 0");
  if (kind == Kind::power_law) {
    if (!(spectral_exponent > 0.0) || spectral_exponent == 1.0)
      throw ValidationError("power-law spectral_exponent must be > 0 and != 1");
    if (!(low_cutoff > 0.0 && high_cutoff > low_cutoff)) throw ValidationError("need 0 < low_cutoff < high_cutoff");
    if (modes_per_decade < 10) throw ValidationError("modes_per_decade must be >= 10");
  }
}

namespace {

double power_law_norm(const NoiseBath& b) {
  const double s = b.spectral_exponent;
  const double wl = 2.0 * pi * b.low_cutoff, wh = 2.0 * pi * b.high_cutoff;
  return b.sigma * b.sigma * (1.0 - s) / (std::pow(wh, 1.0 - s) - std::pow(wl, 1.0 - s));
}

}  // namespace

double NoiseBath::spectral_density(double w) const {
  switch (kind) {
    case Kind::ornstein_uhlenbeck:
      return 2.0 * sigma * sigma * correlation_time / pi / (1.0 + w * w * correlation_time * correlation_time);
    case Kind::power_law: {
      if (w < 2.0 * pi * low_cutoff || w > 2.0 * pi * high_cutoff) return 0.0;
      return power_law_norm(*this) * std::pow(w, -spectral_exponent);
    }
    case Kind::quasi_static:
      return 0.0;
  }
  return 0.0;
}

std::vector<double> cpmg_boundaries(int n, double T) {
  if (n < 1) throw ValidationError("CPMG needs at least one pi pulse");
  if (!(T >= 0.0)) throw ValidationError("evolution time must be >= 0");
  std::vector<double> b;
  b.reserve(static_cast<std::size_t>(n) + 2);
  b.push_back(0.0);
  for (int j = 1; j <= n; ++j) b.push_back((j - 0.5) * T / n);
  b.push_back(T);
  return b;
}

cplx toggling_spectrum(int n, double T, double w) {
  if (w == 0.0) return {0.0, 0.0};
  // int y e^{iwt} = [(-1)^N e^{iwT} - 1 + 2 sum_j (-1)^{j-1} e^{iw t_j}] / (i w)
  const double tau = T / n;
  const cplx step = std::polar(1.0, w * tau);
  cplx z = std::polar(1.0, 0.5 * w * tau);
  cplx sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= n; ++j) {
    sum += sign * z;
    z *= step;
    sign = -sign;
  }
  const double last = (n % 2 == 0) ? 1.0 : -1.0;
  const cplx num = last * std::polar(1.0, w * T) - 1.0 + 2.0 * sum;
  return num / cplx(0.0, w);
}

double filter_function_decay(const NoiseBath& bath, int n, double T) {
  bath.validate();
  if (n < 1) throw ValidationError("CPMG needs at least one pi pulse");
  if (bath.kind == NoiseBath::Kind::quasi_static || bath.sigma == 0.0 || T == 0.0) return 0.0;
  double lo = 1e-4 / T, hi = 1e4 * n / T;
  if (bath.kind == NoiseBath::Kind::power_law) {
    lo = std::max(lo, 2.0 * pi * bath.low_cutoff);
    hi = std::min(hi, 2.0 * pi * bath.high_cutoff);
    if (!(hi > lo)) return 0.0;
  }
  const double decades = std::log10(hi / lo);
  const int m = std::max(200, static_cast<int>(std::ceil(decades * 1000.0)));
  const double du = std::log(hi / lo) / m;
  std::vector<double> f(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    const double w = lo * std::exp(i * du);
    f[static_cast<std::size_t>(i)] = bath.spectral_density(w) * std::norm(toggling_spectrum(n, T, w)) * w *
                                     ((i == 0 || i == m) ? 0.5 : 1.0);
  }
  return 2.0 * pi * pi * rng::pairwise_sum(f) * du;
}

double oracle_t2(const NoiseBath& bath, int n) {
  if (bath.kind == NoiseBath::Kind::quasi_static || bath.sigma == 0.0)
    throw ValidationError("bath has no decay under CPMG (static or zero noise)");
  auto g = [&](double lt) { return std::log(filter_function_decay(bath, n, std::exp(lt))); };
  // bracket chi = 1 in log T, then safeguarded secant
  double a = std::log(1e-9), ga = g(a);
  double b = a, gb = ga;
  while (gb < 0.0) {
    a = b;
    ga = gb;
    b += std::log(10.0);
    if (b > std::log(1e4)) throw NumericalError("coherence does not decay below 1/e for T < 1e4 s");
    gb = g(b);
  }
  for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
    double c = a - ga * (b - a) / (gb - ga);
    if (!(c > a + 0.01 * (b - a) && c < b - 0.01 * (b - a))) c = 0.5 * (a + b);
    const double gc = g(c);
    if (gc == 0.0) return std::exp(c);
    if (gc < 0.0) {
      a = c;
      ga = gc;
    } else {
      b = c;
      gb = gc;
    }
  }
  return std::exp(a - ga * (b - a) / (gb - ga));
}

CoherenceTrace cpmg_coherence(const SpinSystem& spin, const NoiseBath& bath, int n, const std::vector<double>& times,
                              const CpmgOptions& opt) {
  spin.validate();
  bath.validate();
  if (n < 1) throw ValidationError("CPMG needs at least one pi pulse");
  if (opt.trajectories < 2) throw ValidationError("need at least 2 trajectories");
  for (double t : times)
    if (!(t >= 0.0)) throw ValidationError("evolution times must be >= 0");

  const std::size_t nt = times.size();
  const auto nr = static_cast<std::size_t>(opt.trajectories);
  std::vector<double> cosphi(nt * nr);

  // power-law bath: random Fourier series on log-spaced bins, toggled integrals precomputed
  std::vector<double> amp;
  std::vector<double> cre, cim;
  std::size_t k_modes = 0;
  if (bath.kind == NoiseBath::Kind::power_law) {
    const double wl = 2.0 * pi * bath.low_cutoff, wh = 2.0 * pi * bath.high_cutoff;
    k_modes = static_cast<std::size_t>(std::ceil(std::log10(wh / wl) * bath.modes_per_decade));
    const double du = std::log(wh / wl) / static_cast<double>(k_modes);
    amp.resize(k_modes);
    cre.resize(k_modes * nt);
    cim.resize(k_modes * nt);
    for (std::size_t k = 0; k < k_modes; ++k) {
      const double w0 = wl * std::exp(du * static_cast<double>(k));
      const double w1 = w0 * std::exp(du);
      const double wc = std::sqrt(w0 * w1);
      amp[k] = 2.0 * pi * std::sqrt(bath.spectral_density(wc) * (w1 - w0));
      for (std::size_t i = 0; i < nt; ++i) {
        const cplx y = toggling_spectrum(n, times[i], wc);
        cre[i * k_modes + k] = amp[k] * y.real();
        cim[i * k_modes + k] = amp[k] * y.imag();
      }
    }
  }

#pragma omp parallel for schedule(static)
  for (long r = 0; r < static_cast<long>(nr); ++r) {
    auto eng = rng::stream(bath.seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(n));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto ru = static_cast<std::size_t>(r);
    switch (bath.kind) {
      case NoiseBath::Kind::quasi_static: {
        const double d = bath.sigma * gauss(eng);
        for (std::size_t i = 0; i < nt; ++i) {
          const auto b = cpmg_boundaries(n, times[i]);
          double acc = 0.0, sign = 1.0;
          for (std::size_t s = 0; s + 1 < b.size(); ++s, sign = -sign) acc += sign * (b[s + 1] - b[s]);
          cosphi[i * nr + ru] = std::cos(2.0 * pi * d * acc);
        }
        break;
      }
      case NoiseBath::Kind::ornstein_uhlenbeck: {
        const double tc = bath.correlation_time, sg = bath.sigma;
        for (std::size_t i = 0; i < nt; ++i) {
          const auto b = cpmg_boundaries(n, times[i]);
          double x = sg * gauss(eng);
          double acc = 0.0, sign = 1.0;
          for (std::size_t s = 0; s + 1 < b.size(); ++s, sign = -sign) {
            const double h = b[s + 1] - b[s];
            const double u = h / tc;
            const double m = -std::expm1(-u);
            const double e = 1.0 - m;
            const double var_x = -std::expm1(-2.0 * u);
            // conditional variance of the integral: 2u - 4 tanh(u/2)
            double q;
            if (u < 0.1) {
              const double u2 = u * u;
              q = u * u2 * (1.0 / 6.0 - u2 / 60.0 + 17.0 * u2 * u2 / 10080.0 - 31.0 * u2 * u2 * u2 / 362880.0);
            } else {
              q = 2.0 * u - 4.0 * std::tanh(0.5 * u);
            }
            const double z1 = gauss(eng), z2 = gauss(eng);
            double integral = x * tc * m;
            double x_next = x * e;
            if (var_x > 0.0) {
              const double sx = std::sqrt(var_x);
              x_next += sg * sx * z1;
              integral += sg * tc * m * m / sx * z1 + sg * tc * std::sqrt(std::max(q, 0.0)) * z2;
            }
            acc += sign * integral;
            x = x_next;
          }
          cosphi[i * nr + ru] = std::cos(2.0 * pi * acc);
        }
        break;
      }
      case NoiseBath::Kind::power_law: {
        std::vector<double> xi(k_modes), eta(k_modes);
        for (std::size_t k = 0; k < k_modes; ++k) {
          xi[k] = gauss(eng);
          eta[k] = gauss(eng);
        }
        for (std::size_t i = 0; i < nt; ++i) {
          double phi = 0.0;
          const double* a = &cre[i * k_modes];
          const double* c = &cim[i * k_modes];
          for (std::size_t k = 0; k < k_modes; ++k) phi += a[k] * xi[k] + c[k] * eta[k];
          cosphi[i * nr + ru] = std::cos(phi);
        }
        break;
      }
    }
  }

  CoherenceTrace tr;
  tr.evolution_times = times;
  tr.pulse_count = n;
  tr.trajectories = opt.trajectories;
  double worst = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    std::span<const double> row(&cosphi[i * nr], nr);
    const double mean = rng::pairwise_sum(row) / static_cast<double>(nr);
    std::vector<double> dev(nr);
    for (std::size_t r = 0; r < nr; ++r) dev[r] = (row[r] - mean) * (row[r] - mean);
    const double se = std::sqrt(rng::pairwise_sum(dev) / static_cast<double>(nr - 1) / static_cast<double>(nr));
    const double env = std::isinf(spin.T2_intrinsic) ? 1.0 : std::exp(-times[i] / spin.T2_intrinsic);
    tr.coherence.push_back(mean * env);
    tr.standard_error.push_back(se * env);
    worst = std::max(worst, se * env);
  }
  if (worst > opt.target_standard_error) {
    std::ostringstream os;
    os << "standard error " << worst << " exceeds target " << opt.target_standard_error << " with "
       << opt.trajectories << " trajectories";
    tr.warning = os.str();
  }
  return tr;
}

StretchedExponential fit_stretched_exponential(const CoherenceTrace& tr, double lo, double hi) {
  // weights from the Monte Carlo error propagated through ln(-ln C)
  std::vector<double> x, y, w;
  const bool weighted = tr.standard_error.size() == tr.coherence.size();
  for (std::size_t i = 0; i < tr.coherence.size(); ++i) {
    const double c = tr.coherence[i];
    if (c >= lo && c <= hi && tr.evolution_times[i] > 0.0) {
      x.push_back(std::log(tr.evolution_times[i]));
      y.push_back(std::log(-std::log(c)));
      double wi = 1.0;
      if (weighted && tr.standard_error[i] > 0.0) {
        const double sy = tr.standard_error[i] / std::abs(c * std::log(c));
        wi = 1.0 / (sy * sy);
      }
      w.push_back(wi);
    }
  }
  if (x.size() < 2) throw NumericalError("too few trace points inside the fitting window for a T2 fit");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const double den = sw * sxx - sx * sx;
  if (!(std::abs(den) > 1e-300 * sw * sw)) throw NumericalError("degenerate time grid for T2 fit");
  const double beta = (sw * sxy - sx * sy) / den;
  const double icpt = (sy - beta * sx) / sw;
  if (!(beta > 0.0)) throw NumericalError("coherence trace does not decay");
  return {std::exp(-icpt / beta), beta, static_cast<int>(x.size())};
}

PowerLawFit fit_t2_power_law(const std::vector<double>& nv, const std::vector<double>& t2) {
  if (nv.size() != t2.size()) throw ValidationError("N and T2 arrays differ in length");
  if (nv.size() < 3) throw ValidationError("power-law fit needs at least 3 points");
  const auto m = static_cast<Eigen::Index>(nv.size());
  Eigen::MatrixXd a(m, 2);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (!(nv[u] > 0.0) || !(t2[u] > 0.0)) throw ValidationError("power-law fit needs positive N and T2");
    a(i, 0) = 1.0;
    a(i, 1) = std::log(nv[u]);
    b(i) = std::log(t2[u]);
  }
  const Eigen::Matrix2d ata = a.transpose() * a;
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(ata);
  if (svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0))
    throw NumericalError("degenerate design matrix in power-law fit (all N equal)");
  const Eigen::Vector2d p = ata.ldlt().solve(a.transpose() * b);
  const double ssr = (a * p - b).squaredNorm();
  PowerLawFit f;
  f.amplitude = std::exp(p(0));
  f.exponent = p(1);
  f.covariance = (m > 2 ? ssr / static_cast<double>(m - 2) : 0.0) * ata.inverse();
  f.amplitude_sigma = f.amplitude * std::sqrt(f.covariance(0, 0));
  f.exponent_sigma = std::sqrt(f.covariance(1, 1));
  return f;
}

double oracle_alpha(const NoiseBath& bath, const std::vector<int>& ns) {
  std::vector<double> nv, t2;
  for (int n : ns) {
    nv.push_back(n);
    t2.push_back(oracle_t2(bath, n));
  }
  return fit_t2_power_law(nv, t2).exponent;
}

double power_law_exponent_for_alpha(double alpha, NoiseBath bath, const std::vector<int>& ns) {
  if (!(alpha > 0.5 && alpha < 0.8)) throw ValidationError("target alpha must lie in (0.5, 0.8)");
  bath.kind = NoiseBath::Kind::power_law;
  auto g = [&](double s) {
    bath.spectral_exponent = s;
    return oracle_alpha(bath, ns) - alpha;
  };
  // alpha(s) turns over once the low cutoff dominates, so bracket the first crossing.
  double a = 1.2, ga = g(a), b = a, gb = ga;
  while (ga * gb > 0.0) {
    if (b >= 4.5) throw NumericalError("target alpha not bracketed by spectral exponents in [1.2, 4.5]");
    a = b;
    ga = gb;
    b = std::min(b + 0.4, 4.5);
    gb = g(b);
  }
  for (int it = 0; it < 60 && b - a > 1e-6; ++it) {
    double c = a - ga * (b - a) / (gb - ga);
    if (!(c > a + 0.05 * (b - a) && c < b - 0.05 * (b - a))) c = 0.5 * (a + b);
    const double gc = g(c);
    if ((gc < 0.0) == (ga < 0.0)) {
      a = c;
      ga = gc;
    } else {
      b = c;
      gb = gc;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace hprobe::spin
