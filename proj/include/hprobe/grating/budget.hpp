#pragma once

namespace hprobe::grating {

struct EfficiencyBudget {
  double directionality_D = 0.0;
  double overlap_x_Ox = 0.0;
  double overlap_y_Oy = 0.0;
  double taper_transmission = 0.0;
  double interface_transmission = 0.0;
  double total_eta = 0.0;
};

// Product of the five factors; each must lie in [0, 1].
EfficiencyBudget compose_budget(double directionality, double overlap_x, double overlap_y,
                                double taper, double interface);

// Normal-incidence power transmission of a dielectric/air interface.
double fresnel_transmission(double n);

}  // namespace hprobe::grating
