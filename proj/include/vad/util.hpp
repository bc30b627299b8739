#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vad {

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64_file(const std::string& path);
/// Hash over the named files (sorted), mixing names and contents.
std::uint64_t hash_files(const std::string& dir, const std::vector<std::string>& names);
/// All regular files directly inside dir, sorted by name.
std::vector<std::string> list_files(const std::string& dir);

std::string to_hex(std::uint64_t v);
std::string iso8601_now();

}  // namespace vad
