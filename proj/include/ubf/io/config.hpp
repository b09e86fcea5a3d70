#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ubf::io {

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

/// Every accepted key with its default; unknown keys are rejected.
const std::vector<ConfigKey>& config_schema();

/// Flat `key = value` configuration. '#' starts a comment; blank lines are ignored.
class PipelineConfig {
 public:
  static PipelineConfig parse(std::string_view text);
  static PipelineConfig load(const std::filesystem::path& path);

  /// Explicitly set entries, sorted by key, one `key = value` per line.
  std::string serialize() const;

  void set(std::string_view key, std::string value);
  bool has_explicit(std::string_view key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  /// Explicit value, else the schema default.
  std::string get(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<double> get_doubles(std::string_view key) const;
  std::vector<std::size_t> get_sizes(std::string_view key) const;
  /// Empty for the value "auto".
  std::optional<double> get_optional_double(std::string_view key) const;
  std::optional<std::size_t> get_optional_size(std::string_view key) const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ubf::io
