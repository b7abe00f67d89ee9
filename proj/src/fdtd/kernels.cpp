#include "hprobe/fdtd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace hprobe::fdtd {

std::size_t CpmlAxis::slab_index(std::size_t j) const {
  if (j < cells) return j;
  if (j + cells >= n) return j - (n - 2 * cells);
  return npos;
}

CpmlAxis make_cpml_axis(std::size_t n, std::size_t cells, double dt, int m, double kappa_max,
                        double alpha_max) {
  CpmlAxis ax;
  ax.n = n;
  ax.cells = cells;
  const double depth = static_cast<double>(cells);
  const double sigma_max = 0.8 * (m + 1);  // optimal grading in grid units (eta0 = dx = 1)
  auto coeffs = [&](double pos, double& kinv, double& b, double& a) {
    // pos: distance into the PML measured in cells (0 at the interior face)
    const double d = std::clamp(pos / depth, 0.0, 1.0);
    const double sigma = sigma_max * std::pow(d, m);
    const double kappa = 1.0 + (kappa_max - 1.0) * std::pow(d, m);
    const double alpha = alpha_max * (1.0 - d);
    kinv = 1.0 / kappa;
    b = std::exp(-(sigma / kappa + alpha) * dt);
    a = (sigma > 0.0) ? sigma / (sigma * kappa + kappa * kappa * alpha) * (b - 1.0) : 0.0;
  };
  ax.kinv_e.assign(n, 1.0);
  ax.b_e.assign(n, 1.0);
  ax.a_e.assign(n, 0.0);
  ax.kinv_h.assign(n, 1.0);
  ax.b_h.assign(n, 1.0);
  ax.a_h.assign(n, 0.0);
  // faces sit half a cell outside the first/last interior node
  const double lo_face = depth - 0.5;
  const double hi_face = static_cast<double>(n) - depth - 0.5;
  for (std::size_t j = 0; j < n; ++j) {
    const double xe = static_cast<double>(j);
    const double xh = xe + 0.5;
    if (xe < lo_face) coeffs(lo_face - xe, ax.kinv_e[j], ax.b_e[j], ax.a_e[j]);
    if (xe > hi_face) coeffs(xe - hi_face, ax.kinv_e[j], ax.b_e[j], ax.a_e[j]);
    if (xh < lo_face) coeffs(lo_face - xh, ax.kinv_h[j], ax.b_h[j], ax.a_h[j]);
    if (xh > hi_face) coeffs(xh - hi_face, ax.kinv_h[j], ax.b_h[j], ax.a_h[j]);
  }
  return ax;
}

FieldState::FieldState(std::size_t nx_, std::size_t nz_, std::size_t c)
    : nx(nx_),
      nz(nz_),
      ey(nx_ * nz_, 0.0),
      hx(nx_ * nz_, 0.0),
      hz(nx_ * nz_, 0.0),
      psi_ey_x(2 * c * nz_, 0.0),
      psi_ey_z(2 * c * nx_, 0.0),
      psi_hz_x(2 * c * nz_, 0.0),
      psi_hx_z(2 * c * nx_, 0.0) {}

double FieldState::energy(const std::vector<double>& eps) const {
  double u = 0.0;
  for (std::size_t p = 0; p < ey.size(); ++p) u += eps[p] * ey[p] * ey[p] + hx[p] * hx[p] + hz[p] * hz[p];
  return 0.5 * u;
}

namespace {

// One z-row of the H update. Row k updates hx(k, :) (between Ey rows k, k+1) and hz(k, :).
inline void h_row(FieldState& f, const KernelContext& c, std::size_t k) {
  const std::size_t nx = f.nx;
  const double s = c.courant;
  const double* ey = f.ey.data() + k * nx;
  double* hz = f.hz.data() + k * nx;
  const auto& px = *c.px;
  for (std::size_t i = 0; i + 1 < nx; ++i) hz[i] -= s * (ey[i + 1] - ey[i]) * px.kinv_h[i];
  // x-PML corrections for hz
  const std::size_t cells = px.cells;
  double* psi = f.psi_ey_x.data() + k * 2 * cells;
  for (std::size_t q = 0; q < 2 * cells; ++q) {
    const std::size_t i = q < cells ? q : nx - 2 * cells + q;
    if (i + 1 >= nx) continue;
    psi[q] = px.b_h[i] * psi[q] + px.a_h[i] * (ey[i + 1] - ey[i]);
    hz[i] -= s * psi[q];
  }
  if (k + 1 >= f.nz) return;
  const auto& pz = *c.pz;
  double* hx = f.hx.data() + k * nx;
  const double* ey_up = ey + nx;
  const double kz = pz.kinv_h[k];
  for (std::size_t i = 0; i < nx; ++i) hx[i] += s * (ey_up[i] - ey[i]) * kz;
  const std::size_t q = pz.slab_index(k);
  if (q != CpmlAxis::npos) {
    double* pr = f.psi_ey_z.data() + q * nx;
    const double b = pz.b_h[k], a = pz.a_h[k];
    for (std::size_t i = 0; i < nx; ++i) {
      pr[i] = b * pr[i] + a * (ey_up[i] - ey[i]);
      hx[i] += s * pr[i];
    }
  }
}

inline void e_row(FieldState& f, const KernelContext& c, std::size_t k) {
  const std::size_t nx = f.nx;
  const double s = c.courant;
  double* ey = f.ey.data() + k * nx;
  const double* hx = f.hx.data() + k * nx;
  const double* hx_dn = hx - nx;
  const double* hz = f.hz.data() + k * nx;
  const double* ie = c.inv_eps->data() + k * nx;
  const auto& px = *c.px;
  const auto& pz = *c.pz;
  const double kz = pz.kinv_e[k];
  const std::size_t qz = pz.slab_index(k);
  double* pr = qz != CpmlAxis::npos ? f.psi_hx_z.data() + qz * nx : nullptr;
  const double bz = pz.b_e[k], az = pz.a_e[k];
  const std::size_t cells = px.cells;
  double* psi = f.psi_hz_x.data() + k * 2 * cells;
  for (std::size_t i = 1; i + 1 < nx; ++i) {
    const double dhx = hx[i] - hx_dn[i];
    const double dhz = hz[i] - hz[i - 1];
    double curl = dhx * kz - dhz * px.kinv_e[i];
    if (pr) {
      pr[i] = bz * pr[i] + az * dhx;
      curl += pr[i];
    }
    ey[i] += s * ie[i] * curl;
  }
  for (std::size_t q = 0; q < 2 * cells; ++q) {
    const std::size_t i = q < cells ? q : nx - 2 * cells + q;
    if (i == 0 || i + 1 >= nx) continue;
    psi[q] = px.b_e[i] * psi[q] + px.a_e[i] * (hz[i] - hz[i - 1]);
    ey[i] -= s * ie[i] * psi[q];
  }
}

}  // namespace

void update_h_serial(FieldState& f, const KernelContext& c) {
  for (std::size_t k = 0; k < f.nz; ++k) h_row(f, c, k);
}

void update_e_serial(FieldState& f, const KernelContext& c) {
  for (std::size_t k = 1; k + 1 < f.nz; ++k) e_row(f, c, k);
}

void update_h_omp(FieldState& f, const KernelContext& c) {
  const long nz = static_cast<long>(f.nz);
#pragma omp parallel for schedule(static)
  for (long k = 0; k < nz; ++k) h_row(f, c, static_cast<std::size_t>(k));
}

void update_e_omp(FieldState& f, const KernelContext& c) {
  const long nz = static_cast<long>(f.nz);
#pragma omp parallel for schedule(static)
  for (long k = 1; k < nz - 1; ++k) e_row(f, c, static_cast<std::size_t>(k));
}

}  // namespace hprobe::fdtd
