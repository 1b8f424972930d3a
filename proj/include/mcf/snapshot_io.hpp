#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mcf/grid_geometry.hpp"
#include "mcf/trajectory.hpp"

namespace mcf {

// Binary snapshot layout, all little-endian:
//   "MCFS" | u32 format_version | u32 n | u32 N | u32 sizes[n] | f64 h[n] | f64 t
//   | f64 F[nodes][N]
// Ambient periods are not part of the file; they travel in trajectory.json.
std::vector<std::uint8_t> encode_snapshot(const Immersion& imm);
// Throws ParseError on a bad magic or header, VersionMismatch on another
// format_version and InsufficientData on a truncated payload.
Immersion decode_snapshot(const std::vector<std::uint8_t>& bytes,
                          const std::vector<double>& periods = {});

void write_snapshot(const std::filesystem::path& path, const Immersion& imm);
Immersion read_snapshot(const std::filesystem::path& path,
                        const std::vector<double>& periods = {});

// Header row of column names, then one row per sample; every value printed
// with %.17g.
void write_series_csv(std::ostream& os, const MonitorSeries& series);
std::string format_double(double x);

}  // namespace mcf
