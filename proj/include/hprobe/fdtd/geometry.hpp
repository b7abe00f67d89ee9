#pragma once

#include <cstddef>
#include <vector>

#include "hprobe/grating/schedule.hpp"

namespace hprobe::fdtd {

struct Layer {
  double index = 1.0;
  double thickness = 0.0;  // ignored for the first (substrate) and last (cladding) layer
};

// Bottom (substrate) to top (cladding); the outer two layers are semi-infinite.
struct LayerStack {
  std::vector<Layer> layers;
  std::size_t device_layer = 1;  // the layer the grating is etched into

  void validate() const;
  double max_index() const;
  double finite_thickness() const;  // sum of the finite layers
  const Layer& device() const { return layers.at(device_layer); }
};

// 220 nm silicon on YSO with air cladding.
LayerStack default_soi_stack(double device_thickness = 220e-9);

struct SimDomain {
  double extent_x = 0.0;
  double extent_z = 0.0;
  double grid_step = 20e-9;
  int pml_cells = 10;
  double courant_factor = 0.5;
  long max_steps = 200000;
  double shutoff_threshold = 1e-5;

  void validate() const;
  std::size_t nx() const;
  std::size_t nz() const;
};

// Where the device is placed inside the domain, plus monitor planes.
struct GratingLayout {
  double stack_base_z = 0.0;        // bottom of the first finite layer
  double grating_start_x = 0.0;
  double source_x = 0.0;
  double reflection_monitor_x = 0.0;
  double transmission_monitor_x = 0.0;
  double up_monitor_z = 0.0;
  double down_monitor_z = 0.0;
  bool swg_first = true;            // SWG segment precedes the silicon segment in each period
};

// Row-major by z-line: value(i, k) = data[k * nx + i].
struct Grid2D {
  std::size_t nx = 0;
  std::size_t nz = 0;
  double step = 0.0;
  std::vector<double> data;

  double& at(std::size_t i, std::size_t k) { return data[k * nx + i]; }
  double at(std::size_t i, std::size_t k) const { return data[k * nx + i]; }
  double x(std::size_t i) const { return (static_cast<double>(i) + 0.5) * step; }
  double z(std::size_t k) const { return (static_cast<double>(k) + 0.5) * step; }
};

struct DomainPlan {
  SimDomain domain;
  GratingLayout layout;
};

// Sizes a domain around a schedule: PML, source and monitor margins, 1 um monitor offsets.
DomainPlan plan_domain(const LayerStack& stack, const grating::ApodizationSchedule& schedule,
                       double grid_step = 20e-9, int pml_cells = 10, double courant = 0.5);

// Cell-averaged relative permittivity (arithmetic mean over each cell).
Grid2D build_permittivity(const LayerStack& stack, const grating::ApodizationSchedule& schedule,
                          const SimDomain& domain, const GratingLayout& layout);

}  // namespace hprobe::fdtd
