#pragma once

#include "hprobe/fdtd/grating_run.hpp"

namespace hprobe::fiber {

// Angular-spectrum propagation of a 1D field by dz along +z (negative dz propagates back)
// in a medium of the given index. Evanescent components are dropped. The field is
// zero-padded internally; the result keeps the input grid. Fields use exp(+i kx x) for
// waves running toward +x.
fdtd::FieldMap2D propagate(const fdtd::FieldMap2D& field, double dz, double medium_index = 1.0);

// Analytic power overlap of two co-axial 1D Gaussian beams with waists w1, w2 whose waists
// are separated by z along the axis.
double gaussian_mismatch_1d(double w1, double w2, double z, double wavelength);

}  // namespace hprobe::fiber
