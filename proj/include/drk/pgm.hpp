#pragma once

#include <fstream>
#include <string>

#include "drk/errors.hpp"
#include "drk/metrics.hpp"

// Binary PGM (P5, maxval 255) for ground-truth masks: 0 = background,
// 255 = foreground. The writer emits a canonical header so save/load
// round trips are byte-identical.

namespace drk {

inline void save_mask_pgm(const std::string& path, const Mask& m) {
    detail::validate_mask(m, "save_mask_pgm");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "P5\n" << m.w << ' ' << m.h << "\n255\n";
    std::string bytes(m.data.size(), '\0');
    for (std::size_t i = 0; i < m.data.size(); ++i) bytes[i] = m.data[i] ? static_cast<char>(255) : static_cast<char>(0);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + path);
}

namespace detail {

inline int pgm_token(std::istream& is, const std::string& path) {
    // Skip whitespace and # comments, then read one decimal token.
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (std::isspace(c)) {
            c = is.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw IoError("malformed PGM header: " + path);
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1 << 20) throw IoError("PGM header value out of range: " + path);
        c = is.get();
    }
    return static_cast<int>(v);
}

}  // namespace detail

inline Mask load_mask_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char m0 = 0, m1 = 0;
    is.get(m0);
    is.get(m1);
    if (!is || m0 != 'P' || m1 != '5') throw IoError("not a P5 PGM: " + path);
    const int w = detail::pgm_token(is, path);
    const int h = detail::pgm_token(is, path);
    const int maxval = detail::pgm_token(is, path);
    if (w < 1 || h < 1) throw IoError("bad PGM dims: " + path);
    if (maxval != 255) throw IoError("unsupported PGM maxval: " + path);
    // A single whitespace byte separates header and payload; pgm_token has
    // already consumed it.
    Mask m = Mask::zeros(h, w);
    std::string bytes(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), '\0');
    is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (is.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError("truncated PGM payload: " + path);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const unsigned char v = static_cast<unsigned char>(bytes[i]);
        if (v == 0)
            m.data[i] = 0;
        else if (v == 255)
            m.data[i] = 1;
        else
            throw IoError("PGM pixel is neither 0 nor 255: " + path);
    }
    return m;
}

}  // namespace drk
