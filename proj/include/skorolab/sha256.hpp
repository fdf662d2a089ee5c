#pragma once

#include <cstdint>
#include <string>

namespace skorolab {

/// SHA-256 digest as a lowercase hex string.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file(const std::string& path);

}  // namespace skorolab
