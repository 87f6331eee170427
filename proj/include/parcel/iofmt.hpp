#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "parcel/feature_grid.hpp"
#include "parcel/matrix.hpp"

namespace parcel {

// Binary layouts (all integers unsigned 32-bit little-endian, payload
// IEEE-754 binary32 little-endian):
//   FGRID: "FGRD" | version=1 | H W C | H*W*C floats, (h, w, c) row-major
//   ATTW:  "ATTW" | version=1 | N_q H W | N_q*H*W floats, rows = queries
enum class IoErrorKind {
  OpenFailed,
  BadMagic,
  BadVersion,
  BadHeader,      // zero dimension
  TooLarge,       // header exceeds the payload size cap
  Truncated,      // file shorter or longer than the header implies
  NonFinite,
  NegativeWeight,
};

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  IoErrorKind kind() const { return kind_; }

 private:
  IoErrorKind kind_;
};

constexpr std::uint64_t kDefaultPayloadCap = 1ull << 30;  // 1 GiB

FeatureGrid read_fgrid(const std::string& path,
                       std::uint64_t payload_cap = kDefaultPayloadCap);
void write_fgrid(const FeatureGrid& grid, const std::string& path);

struct AttentionWeightsFile {
  int queries = 0;
  int height = 0;
  int width = 0;
  Matrix weights;  // queries x (height*width)
};

AttentionWeightsFile read_attw(const std::string& path,
                               std::uint64_t payload_cap = kDefaultPayloadCap);
void write_attw(const Matrix& weights, int height, int width, const std::string& path);

}  // namespace parcel
