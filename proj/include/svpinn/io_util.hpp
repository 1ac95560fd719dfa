#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace svpinn {

// Little-endian 64-bit field I/O shared by the batch and checkpoint formats.

inline void write_u64_le(std::FILE* f, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    if (std::fwrite(b, 1, 8, f) != 8) throw std::runtime_error("write_u64_le: short write");
}

inline std::uint64_t read_u64_le(std::FILE* f) {
    unsigned char b[8];
    if (std::fread(b, 1, 8, f) != 8) throw std::runtime_error("read_u64_le: short read");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void write_f64_le(std::FILE* f, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64_le(f, bits);
}

inline double read_f64_le(std::FILE* f) {
    const std::uint64_t bits = read_u64_le(f);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

struct FileCloser {
    std::FILE* f;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

}  // namespace svpinn
