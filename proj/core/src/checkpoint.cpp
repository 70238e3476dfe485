#include <algorithm>
#include <limits>

#include <zlib.h>

#include "cagan/trainer.hpp"

namespace cagan {

std::uint32_t checkpoint_crc32(std::string_view payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* data = reinterpret_cast<const Bytef*>(payload.data());
  std::size_t remaining = payload.size();
  while (remaining > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(remaining, std::numeric_limits<uInt>::max()));
    crc = crc32(crc, data, chunk);
    data += chunk;
    remaining -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace cagan
