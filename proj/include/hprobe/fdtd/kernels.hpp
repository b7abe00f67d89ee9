#pragma once

#include <cstddef>
#include <vector>

namespace hprobe::fdtd {

// Graded CPML coefficients along one axis. Arrays are indexed by node for E-located
// derivatives and by half-node for H-located derivatives.
struct CpmlAxis {
  std::size_t n = 0;      // nodes along the axis
  std::size_t cells = 0;  // PML depth at each end
  std::vector<double> kinv_e, b_e, a_e;  // at integer nodes (derivatives of H, used in E update)
  std::vector<double> kinv_h, b_h, a_h;  // at half nodes (derivatives of E, used in H update)

  // Slab-local index of node j, or npos when j is outside both PML slabs.
  std::size_t slab_index(std::size_t j) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

CpmlAxis make_cpml_axis(std::size_t n, std::size_t cells, double dt, int grading = 3,
                        double kappa_max = 4.0, double alpha_max = 0.05);

// TE fields (Ey, Hx, Hz) in grid units: dx = 1, c = 1, H scaled by the free-space impedance.
struct FieldState {
  std::size_t nx = 0, nz = 0;
  std::vector<double> ey, hx, hz;
  // CPML auxiliaries: x-slabs are (2*cells) columns by nz rows, z-slabs are nx columns by (2*cells) rows.
  std::vector<double> psi_ey_x, psi_ey_z, psi_hz_x, psi_hx_z;

  FieldState(std::size_t nx, std::size_t nz, std::size_t pml_cells);
  double energy(const std::vector<double>& eps) const;
};

struct KernelContext {
  const std::vector<double>* inv_eps = nullptr;  // 1 / eps_r per Ey node
  const CpmlAxis* px = nullptr;
  const CpmlAxis* pz = nullptr;
  double courant = 0.5;
};

// Serial reference kernels.
void update_h_serial(FieldState& f, const KernelContext& ctx);
void update_e_serial(FieldState& f, const KernelContext& ctx);

// OpenMP kernels, parallel over z-rows. Same arithmetic as the serial ones, bit for bit.
void update_h_omp(FieldState& f, const KernelContext& ctx);
void update_e_omp(FieldState& f, const KernelContext& ctx);

}  // namespace hprobe::fdtd
