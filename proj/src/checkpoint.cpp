#include "nnkit/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "nnkit/error.hpp"

namespace nnkit {

namespace {

constexpr char kMagic[8] = {'N', 'N', 'K', 'C', 'H', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& is, const std::string& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw TruncatedFileError("checkpoint truncated: " + path);
  return v;
}

}  // namespace

void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d = 0; d < t->rank(); ++d) put<std::uint64_t>(os, t->extent(d));
    os.write(reinterpret_cast<const char*>(t->data()),
             static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!os) throw IoError("write failed: " + path);
}

std::vector<std::pair<std::string, Tensor>> load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw BadMagicError("not a checkpoint file: " + path);
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  }
  const auto count = get<std::uint32_t>(is, path);
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw TruncatedFileError("checkpoint truncated: " + path);
    const auto rank = get<std::uint32_t>(is, path);
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& e : shape) {
      e = static_cast<std::size_t>(get<std::uint64_t>(is, path));
      n *= e;
    }
    std::vector<double> data(n);
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw TruncatedFileError("checkpoint truncated: " + path);
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

}  // namespace nnkit
