#include "hprobe/grating/slab_mode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/error.hpp"

namespace hprobe::grating {

namespace {

struct Dispersion {
  double k0, n_core, n_sub, n_clad, d;

  // kappa*d - atan(gs/kappa) - atan(gc/kappa); strictly decreasing in n, root is TE0.
  double operator()(double n) const {
    const double kappa = k0 * std::sqrt(std::max(n_core * n_core - n * n, 0.0));
    const double gs = k0 * std::sqrt(std::max(n * n - n_sub * n_sub, 0.0));
    const double gc = k0 * std::sqrt(std::max(n * n - n_clad * n_clad, 0.0));
    return kappa * d - std::atan2(gs, kappa) - std::atan2(gc, kappa);
  }
};

}  // namespace

double SlabMode::field(double z) const {
  const double phase_sub = std::atan2(gamma_sub, kappa);
  if (z < 0.0) return std::cos(phase_sub) * std::exp(gamma_sub * z);
  if (z > thickness)
    return std::cos(kappa * thickness - phase_sub) * std::exp(-gamma_clad * (z - thickness));
  return std::cos(kappa * z - phase_sub);
}

SlabMode solve_slab_te0(double core_index, double core_thickness, double wavelength,
                        double substrate_index, double cladding_index) {
  if (!(core_thickness > 0.0) || !(wavelength > 0.0))
    throw ValidationError("slab thickness and wavelength must be positive");
  const double n_lo = std::max(substrate_index, cladding_index);
  if (!(core_index > n_lo)) {
    std::ostringstream os;
    os << "no guided mode: core index " << core_index << " does not exceed bounding index " << n_lo;
    throw ValidationError(os.str());
  }
  const Dispersion f{2.0 * constants::pi / wavelength, core_index, substrate_index, cladding_index,
                     core_thickness};
  double lo = n_lo;
  double hi = core_index;
  if (f(lo) <= 0.0) {
    std::ostringstream os;
    os << "slab below TE0 cutoff (n_core=" << core_index << ", t=" << core_thickness
       << " m, lambda=" << wavelength << " m)";
    throw ValidationError(os.str());
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  SlabMode m;
  m.modal_index = 0.5 * (lo + hi);
  m.wavelength = wavelength;
  m.thickness = core_thickness;
  m.kappa = f.k0 * std::sqrt(core_index * core_index - m.modal_index * m.modal_index);
  m.gamma_sub = f.k0 * std::sqrt(m.modal_index * m.modal_index - substrate_index * substrate_index);
  m.gamma_clad = f.k0 * std::sqrt(m.modal_index * m.modal_index - cladding_index * cladding_index);
  return m;
}

}  // namespace hprobe::grating
