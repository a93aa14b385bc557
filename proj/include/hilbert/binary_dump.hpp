#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hilbert {

struct DumpHeader {
    std::int32_t n_per_axis = 0;
    double v_max = 0.0;
    std::vector<double> params;  // free-form parameter echo
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
};

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 1469598103934665603ULL);
std::uint64_t fnv1a_doubles(std::span<const double> v, std::uint64_t seed = 1469598103934665603ULL);

// Row-major little-endian doubles after a fixed magic and the header.
void write_dump(const std::filesystem::path& path, const DumpHeader& header, std::span<const double> body);
bool read_dump(const std::filesystem::path& path, DumpHeader& header, std::vector<double>& body);

} // namespace hilbert
