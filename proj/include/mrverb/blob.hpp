#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mrverb/error.hpp"
#include "mrverb/matrix.hpp"

namespace mrverb {

// Weight blob layout: "MRVW", u32 version, u64 value count, then little-endian IEEE doubles for
// each matrix in order.
namespace blob {

inline constexpr char kMagic[4] = {'M', 'R', 'V', 'W'};
inline constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
    unsigned char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw CheckpointError("weight blob is truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[i]) << (8 * i);
    return v;
}

}  // namespace blob

inline void save_blob(const std::filesystem::path& path, const std::vector<const Matrix*>& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + path.string());
    std::uint64_t count = 0;
    for (const auto* m : params) count += m->size();
    out.write(blob::kMagic, 4);
    blob::put_le<std::uint32_t>(out, blob::kVersion);
    blob::put_le<std::uint64_t>(out, count);
    for (const auto* m : params)
        for (double v : m->values()) blob::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    if (!out) throw CheckpointError("failed writing " + path.string());
}

/// Fills `params` (already shaped) from a blob; the stored count must match exactly.
inline void load_blob(const std::filesystem::path& path, const std::vector<Matrix*>& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot read " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, blob::kMagic, 4) != 0)
        throw CheckpointError(path.string() + " is not a weight blob");
    if (blob::get_le<std::uint32_t>(in) != blob::kVersion)
        throw CheckpointError(path.string() + " has an unsupported version");
    std::uint64_t expected = 0;
    for (const auto* m : params) expected += m->size();
    auto count = blob::get_le<std::uint64_t>(in);
    if (count != expected)
        throw CheckpointError(path.string() + " holds " + std::to_string(count) + " values, expected " +
                              std::to_string(expected));
    for (auto* m : params)
        for (double& v : m->values()) v = std::bit_cast<double>(blob::get_le<std::uint64_t>(in));
}

}  // namespace mrverb
