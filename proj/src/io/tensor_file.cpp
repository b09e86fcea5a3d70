#include "ubf/io/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "ubf/error.hpp"

namespace ubf::io {

namespace {

static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

constexpr std::string_view kMagic = "UBF1";

template <class U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::string_view take(std::size_t n, const char* what) {
    if (remaining() < n) throw IoError(std::string("tensor file truncated while reading ") + what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <class U>
  U get(const char* what) {
    U v;
    std::memcpy(&v, take(sizeof(U), what).data(), sizeof(U));
    return v;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t TensorRecord::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void TensorFile::add(std::string name, std::vector<std::uint64_t> dims, std::vector<float> values) {
  add(TensorRecord{std::move(name), std::move(dims), std::move(values)});
}

void TensorFile::add(TensorRecord record) {
  if (find(record.name)) throw IoError("tensor file: duplicate record name '" + record.name + "'");
  if (record.dims.size() > 255) throw IoError("tensor file: too many dimensions");
  if (record.element_count() != record.values.size()) {
    throw IoError("tensor file: record '" + record.name + "' has " + std::to_string(record.values.size()) +
                  " values for " + std::to_string(record.element_count()) + " elements");
  }
  records_.push_back(std::move(record));
}

const TensorRecord* TensorFile::find(std::string_view name) const {
  for (const auto& r : records_) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const TensorRecord& TensorFile::get(std::string_view name) const {
  if (const auto* r = find(name)) return *r;
  throw IoError("tensor file: no record named '" + std::string(name) + "'");
}

std::string TensorFile::encode() const {
  std::string out;
  for (const auto& r : records_) {
    out.append(kMagic);
    put<std::uint8_t>(out, kTensorVersion);
    put<std::uint8_t>(out, kDtypeFloat32);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(r.dims.size()));
    for (auto d : r.dims) put<std::uint64_t>(out, d);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
    out.append(r.name);
    const auto* raw = reinterpret_cast<const char*>(r.values.data());
    out.append(raw, r.values.size() * sizeof(float));
  }
  return out;
}

TensorFile TensorFile::decode(std::string_view bytes) {
  TensorFile f;
  Reader in(bytes);
  while (!in.done()) {
    if (in.take(4, "magic") != kMagic) throw IoError("tensor file: bad magic");
    const auto version = in.get<std::uint8_t>("version");
    if (version != kTensorVersion) throw IoError("tensor file: unsupported version " + std::to_string(version));
    const auto dtype = in.get<std::uint8_t>("dtype");
    if (dtype != kDtypeFloat32) throw IoError("tensor file: unknown dtype code " + std::to_string(dtype));
    const auto ndim = in.get<std::uint8_t>("ndim");
    TensorRecord r;
    std::uint64_t count = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      const auto dim = in.get<std::uint64_t>("dims");
      if (dim != 0 && count > std::numeric_limits<std::uint64_t>::max() / dim) {
        throw IoError("tensor file: dimension product overflows");
      }
      count *= dim;
      r.dims.push_back(dim);
    }
    const auto name_len = in.get<std::uint32_t>("name length");
    r.name = std::string(in.take(name_len, "name"));
    if (count > in.remaining() / sizeof(float)) throw IoError("tensor file: truncated payload in '" + r.name + "'");
    const auto payload = in.take(count * sizeof(float), "payload");
    r.values.resize(count);
    std::memcpy(r.values.data(), payload.data(), payload.size());
    f.add(std::move(r));
  }
  return f;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void TensorFile::save(const std::filesystem::path& path) const { write_file_atomic(path, encode()); }

TensorFile TensorFile::load(const std::filesystem::path& path) { return decode(read_file(path)); }

void write_tensor(const std::filesystem::path& path, const std::string& name, std::vector<std::uint64_t> dims,
                  std::vector<float> values) {
  TensorFile f;
  if (std::filesystem::exists(path)) f = TensorFile::load(path);
  f.add(name, std::move(dims), std::move(values));
  f.save(path);
}

std::vector<float> read_tensor(const std::filesystem::path& path, std::string_view name) {
  return TensorFile::load(path).get(name).values;
}

}  // namespace ubf::io
