#pragma once

#include <filesystem>

#include "hprobe/fdtd/geometry.hpp"
#include "hprobe/fdtd/grating_run.hpp"

namespace hprobe::fdtd {

// CSV layout: header row holds the x coordinates, one row per z-line.
//   permittivity: "z_m", x_0 .. x_{n-1}; rows: z, eps...
//   field map:    "part", "z_m", x_0 ..; rows "re" and "im" at the monitor plane.
void write_permittivity_csv(const std::filesystem::path& path, const Grid2D& eps);
Grid2D read_permittivity_csv(const std::filesystem::path& path);
void write_field_csv(const std::filesystem::path& path, const FieldMap2D& field);
FieldMap2D read_field_csv(const std::filesystem::path& path);

// Binary: 80-byte space-padded ASCII header, then little-endian float64 payload.
//   permittivity: "HPROBE EPS2D nx=<nx> nz=<nz> dx=<step>" then nz*nx values, x fastest.
//   field map:    "HPROBE FIELD1D n=<n> f=<Hz> z=<m>" then n coordinates, then n (re, im) pairs.
constexpr std::size_t binary_header_size = 80;
void write_permittivity_binary(const std::filesystem::path& path, const Grid2D& eps);
Grid2D read_permittivity_binary(const std::filesystem::path& path);
void write_field_binary(const std::filesystem::path& path, const FieldMap2D& field);
FieldMap2D read_field_binary(const std::filesystem::path& path);

}  // namespace hprobe::fdtd
