#include "parcel/iofmt.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace parcel {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_f32(std::vector<unsigned char>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorKind::OpenFailed, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

void spill(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrorKind::OpenFailed, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(IoErrorKind::OpenFailed, "short write to " + path);
}

struct Header {
  std::uint32_t a = 0, b = 0, c = 0;  // three u32 dims after magic+version
};

// Shared header walk for both formats: magic, version, three dims.
Header read_header(const std::vector<unsigned char>& bytes, const char* magic,
                   const std::string& path, std::uint64_t payload_cap) {
  if (bytes.size() < 20) {
    throw IoError(IoErrorKind::Truncated,
                  path + ": " + std::to_string(bytes.size()) + " bytes, header needs 20");
  }
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw IoError(IoErrorKind::BadMagic, path + ": bad magic, expected " + magic);
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kFormatVersion) {
    throw IoError(IoErrorKind::BadVersion, path + ": version " + std::to_string(version) +
                                               ", expected " + std::to_string(kFormatVersion));
  }
  Header h{get_u32(bytes.data() + 8), get_u32(bytes.data() + 12), get_u32(bytes.data() + 16)};
  if (h.a == 0 || h.b == 0 || h.c == 0) {
    throw IoError(IoErrorKind::BadHeader, path + ": zero dimension in header");
  }
  const std::uint64_t payload = 4ull * h.a * h.b * h.c;
  if (payload > payload_cap) {
    throw IoError(IoErrorKind::TooLarge, path + ": payload " + std::to_string(payload) +
                                             " bytes exceeds cap " + std::to_string(payload_cap));
  }
  if (bytes.size() != 20 + payload) {
    throw IoError(IoErrorKind::Truncated,
                  path + ": file is " + std::to_string(bytes.size()) + " bytes, header implies " +
                      std::to_string(20 + payload));
  }
  return h;
}

}  // namespace

FeatureGrid read_fgrid(const std::string& path, std::uint64_t payload_cap) {
  const std::vector<unsigned char> bytes = slurp(path);
  const Header h = read_header(bytes, "FGRD", path, payload_cap);
  FeatureGrid grid(static_cast<int>(h.a), static_cast<int>(h.b), static_cast<int>(h.c));
  const unsigned char* p = bytes.data() + 20;
  for (std::size_t i = 0; i < grid.values.size(); ++i, p += 4) {
    const float v = get_f32(p);
    if (!std::isfinite(v)) {
      throw IoError(IoErrorKind::NonFinite, path + ": non-finite payload value at index " +
                                                std::to_string(i));
    }
    grid.values[i] = static_cast<double>(v);
  }
  return grid;
}

void write_fgrid(const FeatureGrid& grid, const std::string& path) {
  validate_grid(grid);
  std::vector<unsigned char> bytes;
  bytes.reserve(20 + 4 * grid.values.size());
  bytes.insert(bytes.end(), {'F', 'G', 'R', 'D'});
  put_u32(bytes, kFormatVersion);
  put_u32(bytes, static_cast<std::uint32_t>(grid.height));
  put_u32(bytes, static_cast<std::uint32_t>(grid.width));
  put_u32(bytes, static_cast<std::uint32_t>(grid.channels));
  for (double v : grid.values) put_f32(bytes, static_cast<float>(v));
  spill(path, bytes);
}

AttentionWeightsFile read_attw(const std::string& path, std::uint64_t payload_cap) {
  const std::vector<unsigned char> bytes = slurp(path);
  const Header h = read_header(bytes, "ATTW", path, payload_cap);
  AttentionWeightsFile file;
  file.queries = static_cast<int>(h.a);
  file.height = static_cast<int>(h.b);
  file.width = static_cast<int>(h.c);
  file.weights = Matrix(file.queries, file.height * file.width);
  const unsigned char* p = bytes.data() + 20;
  for (std::size_t i = 0; i < file.weights.data.size(); ++i, p += 4) {
    const float v = get_f32(p);
    if (!std::isfinite(v)) {
      throw IoError(IoErrorKind::NonFinite, path + ": non-finite weight at index " +
                                                std::to_string(i));
    }
    if (v < 0.0f) {
      throw IoError(IoErrorKind::NegativeWeight,
                    path + ": negative weight at index " + std::to_string(i));
    }
    file.weights.data[i] = static_cast<double>(v);
  }
  return file;
}

void write_attw(const Matrix& weights, int height, int width, const std::string& path) {
  if (weights.rows < 1 || height < 1 || width < 1 || weights.cols != height * width) {
    throw IoError(IoErrorKind::BadHeader, path + ": weights " + std::to_string(weights.rows) +
                                              "x" + std::to_string(weights.cols) +
                                              " do not tile " + std::to_string(height) + "x" +
                                              std::to_string(width));
  }
  for (double v : weights.data) {
    if (!std::isfinite(v)) throw IoError(IoErrorKind::NonFinite, path + ": non-finite weight");
    if (v < 0.0) throw IoError(IoErrorKind::NegativeWeight, path + ": negative weight");
  }
  std::vector<unsigned char> bytes;
  bytes.reserve(20 + 4 * weights.data.size());
  bytes.insert(bytes.end(), {'A', 'T', 'T', 'W'});
  put_u32(bytes, kFormatVersion);
  put_u32(bytes, static_cast<std::uint32_t>(weights.rows));
  put_u32(bytes, static_cast<std::uint32_t>(height));
  put_u32(bytes, static_cast<std::uint32_t>(width));
  for (double v : weights.data) put_f32(bytes, static_cast<float>(v));
  spill(path, bytes);
}

}  // namespace parcel
