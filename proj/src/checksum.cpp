#include "sqsearch/checksum.hpp"

#include <zlib.h>

#include <fstream>
#include <stdexcept>
#include <vector>

namespace sqsearch {

std::uint32_t crc32_bytes(const void* data, std::size_t size) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

std::uint32_t crc32_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const std::streamsize got = in.gcount();
    if (got > 0) {
      crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(got));
    }
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace sqsearch
