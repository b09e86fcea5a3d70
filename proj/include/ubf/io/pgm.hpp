#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ubf/postproc.hpp"

namespace ubf::io {

/// Maps [-dynamic_range, 0] dB linearly onto [0, 255], rounding half up.
std::uint8_t db_to_gray(double db, double dynamic_range);

/// Binary PGM (P5): width = lateral, height = axial, maxval 255.
std::string encode_pgm(const BmodeImage& image);
void write_pgm(const BmodeImage& image, const std::filesystem::path& path);

}  // namespace ubf::io
