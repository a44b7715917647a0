#include "pairsim/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace pairsim {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'C', 'K'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("checkpoint truncated");
  return v;
}

}  // namespace

void save_parameters(const std::filesystem::path& path, const ParameterMap& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, 4);
  write_raw<std::uint32_t>(os, kCheckpointVersion);
  write_raw<std::uint64_t>(os, params.size());
  for (const auto& p : params.entries()) {
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(p.value.ndim()));
    for (int d : p.value.shape()) write_raw<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(p.value.data()),
             static_cast<std::streamsize>(p.value.numel() * sizeof(float)));
  }
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

void load_parameters(const std::filesystem::path& path, ParameterMap& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("not a parameter checkpoint: " + path.string());
  }
  const auto version = read_raw<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) +
                      " not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto count = read_raw<std::uint64_t>(is);
  if (count != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " parameters, model has " +
                      std::to_string(params.size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_raw<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw FormatError("checkpoint truncated");
    if (!params.contains(name)) {
      throw FormatError("checkpoint parameter not in model: " + name);
    }
    Parameter& p = params.at(name);
    const auto ndim = read_raw<std::uint32_t>(is);
    Shape shape(ndim);
    for (auto& d : shape) d = static_cast<int>(read_raw<std::uint64_t>(is));
    if (shape != p.value.shape()) {
      throw DimensionError("checkpoint shape " + shape_str(shape) + " for " + name +
                           " does not match model shape " + shape_str(p.value.shape()));
    }
    is.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(p.value.numel() * sizeof(float)));
    if (!is) throw FormatError("checkpoint truncated");
  }
}

}  // namespace pairsim
