#include "hprobe/grating/effective_index.hpp"

#include <cmath>
#include <sstream>

#include "hprobe/core/constants.hpp"
#include "hprobe/core/error.hpp"

namespace hprobe::grating {

MixingRule permittivity_mixing() {
  return [](double f, double n_host, double n_fill) {
    return std::sqrt(f * n_fill * n_fill + (1.0 - f) * n_host * n_host);
  };
}

MixingRule index_mixing() {
  return [](double f, double n_host, double n_fill) { return f * n_fill + (1.0 - f) * n_host; };
}

double triangular_fill_fraction(double d_over_a) {
  return constants::pi * d_over_a * d_over_a / (2.0 * std::sqrt(3.0));
}

double effective_index_from_hole(double d_over_a, double n_si, double n_fill, const MixingRule& rule) {
  if (!(d_over_a >= 0.0)) throw ValidationError("hole ratio d/a must be non-negative");
  if (d_over_a >= 1.0) {
    std::ostringstream os;
    os << "hole overlap: d/a = " << d_over_a << " >= 1";
    throw GeometryError(os.str());
  }
  if (!(n_fill >= 1.0)) throw ValidationError("fill index must be >= 1");
  return rule(triangular_fill_fraction(d_over_a), n_si, n_fill);
}

double hole_ratio_for_index(double target, double n_si, double n_fill, const MixingRule& rule) {
  const double hi_ratio = std::nextafter(1.0, 0.0);
  const double n_at_zero = effective_index_from_hole(0.0, n_si, n_fill, rule);
  const double n_at_max = effective_index_from_hole(hi_ratio, n_si, n_fill, rule);
  if (!(target <= n_at_zero && target >= n_at_max)) {
    std::ostringstream os;
    os << "index " << target << " not reachable with holes (range " << n_at_max << " .. "
       << n_at_zero << ")";
    throw ValidationError(os.str());
  }
  double lo = 0.0, hi = hi_ratio;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (effective_index_from_hole(mid, n_si, n_fill, rule) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace hprobe::grating
