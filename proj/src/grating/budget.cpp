#include "hprobe/grating/budget.hpp"

#include "hprobe/core/error.hpp"

namespace hprobe::grating {

EfficiencyBudget compose_budget(double directionality, double overlap_x, double overlap_y,
                                double taper, double interface) {
  require_in_range(directionality, 0.0, 1.0, "directionality");
  require_in_range(overlap_x, 0.0, 1.0, "overlap_x");
  require_in_range(overlap_y, 0.0, 1.0, "overlap_y");
  require_in_range(taper, 0.0, 1.0, "taper_transmission");
  require_in_range(interface, 0.0, 1.0, "interface_transmission");
  return {directionality, overlap_x, overlap_y, taper, interface,
          directionality * overlap_x * overlap_y * taper * interface};
}

double fresnel_transmission(double n) {
  const double r = (n - 1.0) / (n + 1.0);
  return 1.0 - r * r;
}

}  // namespace hprobe::grating
