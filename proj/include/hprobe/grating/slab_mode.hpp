#pragma once

namespace hprobe::grating {

// Fundamental TE mode of a three-layer slab (substrate | core | cladding).
struct SlabMode {
  double modal_index = 0.0;
  double wavelength = 0.0;
  double thickness = 0.0;
  double kappa = 0.0;       // transverse wavenumber in the core, 1/m
  double gamma_sub = 0.0;   // decay constant into the substrate, 1/m
  double gamma_clad = 0.0;  // decay constant into the cladding, 1/m

  // Unnormalized E_y profile; z measured upward from the core/substrate interface.
  double field(double z) const;
};

SlabMode solve_slab_te0(double core_index, double core_thickness, double wavelength,
                        double substrate_index, double cladding_index);

inline double slab_modal_index(double core_index, double core_thickness, double wavelength,
                               double substrate_index, double cladding_index) {
  return solve_slab_te0(core_index, core_thickness, wavelength, substrate_index, cladding_index)
      .modal_index;
}

}  // namespace hprobe::grating
