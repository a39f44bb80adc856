#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace sqsearch {

std::uint32_t crc32_bytes(const void* data, std::size_t size);
std::uint32_t crc32_file(const std::string& path);

}  // namespace sqsearch
