#pragma once

// Minimal named-tensor container.
//
// A file is a concatenation of records, each laid out little-endian as
//
//   "UBF1"            4 bytes magic
//   version           u8   (= 1)
//   dtype             u8   (0 = IEEE-754 float32)
//   ndim              u8
//   dims              ndim x u64
//   name_length       u32
//   name              name_length bytes, UTF-8
//   payload           product(dims) x 4 bytes, row-major
//
// Names are unique within a file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ubf::io {

inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;

struct TensorRecord {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> values;

  std::uint64_t element_count() const;
};

class TensorFile {
 public:
  /// Throws IoError on a duplicate name or when values do not fill dims.
  void add(std::string name, std::vector<std::uint64_t> dims, std::vector<float> values);
  void add(TensorRecord record);

  const TensorRecord* find(std::string_view name) const;
  /// Throws IoError when absent.
  const TensorRecord& get(std::string_view name) const;
  const std::vector<TensorRecord>& records() const noexcept { return records_; }

  std::string encode() const;
  static TensorFile decode(std::string_view bytes);

  /// Atomic: writes a sibling temporary file and renames it over `path`.
  void save(const std::filesystem::path& path) const;
  static TensorFile load(const std::filesystem::path& path);

 private:
  std::vector<TensorRecord> records_;
};

void write_tensor(const std::filesystem::path& path, const std::string& name, std::vector<std::uint64_t> dims,
                  std::vector<float> values);
std::vector<float> read_tensor(const std::filesystem::path& path, std::string_view name);

/// Whole-file helpers shared with the PGM and CSV writers.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace ubf::io
