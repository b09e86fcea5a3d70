#include "ubf/io/pgm.hpp"

#include <algorithm>
#include <cmath>

#include "ubf/io/tensor_file.hpp"

namespace ubf::io {

std::uint8_t db_to_gray(double db, double dynamic_range) {
  const double clipped = std::clamp(db, -dynamic_range, 0.0);
  const double level = std::floor((clipped + dynamic_range) / dynamic_range * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
}

std::string encode_pgm(const BmodeImage& image) {
  const auto& d = image.data;
  std::string out = "P5\n" + std::to_string(d.cols()) + " " + std::to_string(d.rows()) + "\n255\n";
  out.reserve(out.size() + d.size());
  for (double v : d.values()) out.push_back(static_cast<char>(db_to_gray(v, image.dynamic_range)));
  return out;
}

void write_pgm(const BmodeImage& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(image));
}

}  // namespace ubf::io
