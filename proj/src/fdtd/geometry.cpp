#include "hprobe/fdtd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hprobe/core/error.hpp"

namespace hprobe::fdtd {

namespace {

bool divides(double extent, double step) {
  const double q = extent / step;
  return std::abs(q - std::round(q)) < 1e-6 && q >= 1.0;
}

double round_up(double v, double step) { return std::ceil(v / step - 1e-9) * step; }

// Index profile along z for the unpatterned stack, as (z_top, index) bands.
struct Band {
  double z_lo, z_hi, index;
};

std::vector<Band> stack_bands(const LayerStack& s, double base_z, double domain_top) {
  std::vector<Band> bands;
  double z = base_z;
  bands.push_back({-1.0, base_z, s.layers.front().index});
  for (std::size_t l = 1; l + 1 < s.layers.size(); ++l) {
    bands.push_back({z, z + s.layers[l].thickness, s.layers[l].index});
    z += s.layers[l].thickness;
  }
  bands.push_back({z, domain_top + 1.0, s.layers.back().index});
  return bands;
}

double overlap_len(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

void LayerStack::validate() const {
  if (layers.size() < 3) throw ValidationError("layer stack needs substrate, device and cladding");
  if (device_layer == 0 || device_layer + 1 >= layers.size())
    throw ValidationError("device layer must be a finite layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!(layers[i].index >= 1.0)) throw ValidationError("layer indices must be >= 1");
    if (i > 0 && i + 1 < layers.size() && !(layers[i].thickness > 0.0))
      throw ValidationError("finite layer thickness must be > 0");
  }
}

double LayerStack::max_index() const {
  double m = 1.0;
  for (const auto& l : layers) m = std::max(m, l.index);
  return m;
}

double LayerStack::finite_thickness() const {
  double t = 0.0;
  for (std::size_t i = 1; i + 1 < layers.size(); ++i) t += layers[i].thickness;
  return t;
}

LayerStack default_soi_stack(double device_thickness) {
  return LayerStack{{{1.78, 0.0}, {3.48, device_thickness}, {1.0, 0.0}}, 1};
}

void SimDomain::validate() const {
  if (!(grid_step > 0.0)) throw ValidationError("grid_step must be positive");
  if (!divides(extent_x, grid_step) || !divides(extent_z, grid_step))
    throw ValidationError("grid_step must divide the domain extents");
  if (!(courant_factor > 0.0 && courant_factor <= 1.0 / std::sqrt(2.0) + 1e-12)) {
    std::ostringstream os;
    os << "courant_factor " << courant_factor << " violates the 2D stability bound 1/sqrt(2)";
    throw ValidationError(os.str());
  }
  if (pml_cells < 8) throw ValidationError("pml_cells must be >= 8");
  if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
  if (!(shutoff_threshold > 0.0 && shutoff_threshold < 1.0))
    throw ValidationError("shutoff_threshold must be in (0,1)");
  if (nx() < 2u * pml_cells + 4 || nz() < 2u * pml_cells + 4)
    throw ValidationError("domain too small for its PML");
}

std::size_t SimDomain::nx() const { return static_cast<std::size_t>(std::llround(extent_x / grid_step)); }
std::size_t SimDomain::nz() const { return static_cast<std::size_t>(std::llround(extent_z / grid_step)); }

DomainPlan plan_domain(const LayerStack& stack, const grating::ApodizationSchedule& schedule,
                       double dx, int pml_cells, double courant) {
  stack.validate();
  const double pml = pml_cells * dx;
  DomainPlan p;
  auto& L = p.layout;
  L.source_x = round_up(pml + 1.0e-6, dx) + 0.5 * dx;
  L.reflection_monitor_x = round_up(L.source_x + 0.6e-6, dx);
  L.grating_start_x = round_up(L.reflection_monitor_x + 1.0e-6, dx);
  const double grating_end = L.grating_start_x + schedule.total_length();
  L.transmission_monitor_x = round_up(grating_end + 1.0e-6, dx);
  const double extent_x = round_up(L.transmission_monitor_x + 0.6e-6 + pml, dx);

  L.stack_base_z = round_up(pml + 1.6e-6, dx);
  L.down_monitor_z = L.stack_base_z - 1.0e-6;
  const double top = L.stack_base_z + stack.finite_thickness();
  L.up_monitor_z = round_up(top + 1.0e-6, dx);
  const double extent_z = round_up(L.up_monitor_z + 0.6e-6 + pml, dx);

  p.domain.extent_x = extent_x;
  p.domain.extent_z = extent_z;
  p.domain.grid_step = dx;
  p.domain.pml_cells = pml_cells;
  p.domain.courant_factor = courant;
  return p;
}

Grid2D build_permittivity(const LayerStack& stack, const grating::ApodizationSchedule& schedule,
                          const SimDomain& domain, const GratingLayout& layout) {
  stack.validate();
  domain.validate();
  const double dx = domain.grid_step;
  const double usable_end = domain.extent_x - domain.pml_cells * dx;
  const double grating_end = layout.grating_start_x + schedule.total_length();
  if (layout.grating_start_x < layout.source_x || grating_end > usable_end) {
    std::ostringstream os;
    os << "grating does not fit the domain: needs " << grating_end << " m, usable up to " << usable_end
       << " m (deficit " << std::max(grating_end - usable_end, layout.source_x - layout.grating_start_x)
       << " m)";
    throw GeometryError(os.str());
  }

  Grid2D g;
  g.nx = domain.nx();
  g.nz = domain.nz();
  g.step = dx;
  g.data.assign(g.nx * g.nz, 1.0);

  const auto bands = stack_bands(stack, layout.stack_base_z, domain.extent_z);
  // device layer z-extent
  double dev_lo = layout.stack_base_z;
  for (std::size_t l = 1; l < stack.device_layer; ++l) dev_lo += stack.layers[l].thickness;
  const double dev_hi = dev_lo + stack.device().thickness;
  const double n_dev = stack.device().index;

  // x segments of the patterned region: (x0, x1, index)
  std::vector<Band> segments;
  double x = layout.grating_start_x;
  for (const auto& per : schedule.periods) {
    const double swg_len = per.duty_cycle * per.pitch;
    if (layout.swg_first) {
      segments.push_back({x, x + swg_len, per.index});
      segments.push_back({x + swg_len, x + per.pitch, n_dev});
    } else {
      segments.push_back({x, x + per.pitch - swg_len, n_dev});
      segments.push_back({x + per.pitch - swg_len, x + per.pitch, per.index});
    }
    x += per.pitch;
  }

  for (std::size_t k = 0; k < g.nz; ++k) {
    const double z0 = k * dx, z1 = (k + 1) * dx;
    // unpatterned column permittivity
    double eps_stack = 0.0;
    for (const auto& b : bands) eps_stack += overlap_len(z0, z1, b.z_lo, b.z_hi) * b.index * b.index;
    eps_stack /= dx;
    const double dev_frac = overlap_len(z0, z1, dev_lo, dev_hi) / dx;
    for (std::size_t i = 0; i < g.nx; ++i) g.at(i, k) = eps_stack;
    if (dev_frac <= 0.0 || segments.empty()) continue;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double x0 = i * dx, x1 = (i + 1) * dx;
      if (x1 <= segments.front().z_lo || x0 >= segments.back().z_hi) continue;
      // replace device-layer permittivity by the x-average of the segments inside this cell
      double eps_dev = 0.0;
      double covered = 0.0;
      for (const auto& s : segments) {
        const double o = overlap_len(x0, x1, s.z_lo, s.z_hi);
        if (o > 0.0) {
          eps_dev += o * s.index * s.index;
          covered += o;
        }
      }
      eps_dev += (dx - covered) * n_dev * n_dev;
      eps_dev /= dx;
      g.at(i, k) = eps_stack + dev_frac * (eps_dev - n_dev * n_dev);
    }
  }
  // cell averaging is a convex combination; clamp away round-off at the bounds
  const double eps_max = stack.max_index() * stack.max_index();
  for (double& e : g.data) e = std::clamp(e, 1.0, eps_max);
  return g;
}

}  // namespace hprobe::fdtd
