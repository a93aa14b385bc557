#include "hilbert/binary_dump.hpp"

#include <cstring>
#include <fstream>

#include "hilbert/error.hpp"

namespace hilbert {

namespace {
constexpr char kMagic[8] = {'H', 'V', 'P', 'B', 'D', 'M', 'P', '1'};
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a_doubles(std::span<const double> v, std::uint64_t seed) {
    return fnv1a(v.data(), v.size() * sizeof(double), seed);
}

void write_dump(const std::filesystem::path& path, const DumpHeader& hd, std::span<const double> body) {
    if (body.size() != hd.rows * hd.cols) throw PreconditionError("write_dump: body size does not match header");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    std::uint64_t np = hd.params.size();
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&hd.n_per_axis), sizeof(hd.n_per_axis));
    out.write(reinterpret_cast<const char*>(&hd.v_max), sizeof(hd.v_max));
    out.write(reinterpret_cast<const char*>(&np), sizeof(np));
    out.write(reinterpret_cast<const char*>(hd.params.data()), static_cast<std::streamsize>(np * sizeof(double)));
    out.write(reinterpret_cast<const char*>(&hd.rows), sizeof(hd.rows));
    out.write(reinterpret_cast<const char*>(&hd.cols), sizeof(hd.cols));
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size() * sizeof(double)));
    if (!out) throw Error("write failed for " + path.string());
}

bool read_dump(const std::filesystem::path& path, DumpHeader& hd, std::vector<double>& body) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) return false;
    std::uint64_t np = 0;
    in.read(reinterpret_cast<char*>(&hd.n_per_axis), sizeof(hd.n_per_axis));
    in.read(reinterpret_cast<char*>(&hd.v_max), sizeof(hd.v_max));
    in.read(reinterpret_cast<char*>(&np), sizeof(np));
    if (!in || np > 4096) return false;
    hd.params.resize(np);
    in.read(reinterpret_cast<char*>(hd.params.data()), static_cast<std::streamsize>(np * sizeof(double)));
    in.read(reinterpret_cast<char*>(&hd.rows), sizeof(hd.rows));
    in.read(reinterpret_cast<char*>(&hd.cols), sizeof(hd.cols));
    if (!in) return false;
    body.resize(hd.rows * hd.cols);
    in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size() * sizeof(double)));
    return static_cast<bool>(in);
}

} // namespace hilbert
