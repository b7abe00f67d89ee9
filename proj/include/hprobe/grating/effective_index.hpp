#pragma once

#include <functional>

namespace hprobe::grating {

// Maps (hole fill fraction, host index, hole fill index) to an effective index.
using MixingRule = std::function<double(double fill, double n_host, double n_fill)>;

// eps_eff = f*eps_fill + (1-f)*eps_host. Default rule.
MixingRule permittivity_mixing();
// n_eff = f*n_fill + (1-f)*n_host.
MixingRule index_mixing();

// Area fraction of circular holes of diameter d on a triangular lattice of constant a.
double triangular_fill_fraction(double d_over_a);

double effective_index_from_hole(double d_over_a, double n_si, double n_fill,
                                 const MixingRule& rule = permittivity_mixing());

// Inverse of effective_index_from_hole by bisection on d/a in [0, 1).
double hole_ratio_for_index(double target_index, double n_si, double n_fill,
                            const MixingRule& rule = permittivity_mixing());

}  // namespace hprobe::grating
