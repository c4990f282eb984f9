#pragma once

#include <string>

#include "gridtopo/mip.hpp"

namespace gridtopo::mip {

/// Writes fixed-format MPS (NAME, ROWS, COLUMNS with INTORG/INTEND markers,
/// RHS, RANGES, BOUNDS, ENDATA). Names longer than 8 characters force a
/// deterministic rename of every row/column (R0000001.., C0000001..) and a
/// `<path>.names` mapping file. Numeric fields use shortest round-trip
/// formatting so a re-import reproduces the matrix exactly.
void export_mps(const MipInstance& m, const std::string& path);

/// Reads the subset of MPS written by export_mps (plus N/L/G/E rows, RANGES
/// and the common bound keys), for round-trip checks and external instances.
MipInstance import_mps(const std::string& path);

} // namespace gridtopo::mip
