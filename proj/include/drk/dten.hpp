#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "drk/errors.hpp"
#include "drk/tensor.hpp"

// DTEN tensor container: magic "DTEN", version 0x01, dtype byte
// (0 = f32, 1 = f64), rank byte, rank u32 little-endian extents,
// then the row-major payload little-endian.

static_assert(std::endian::native == std::endian::little, "DTEN io assumes a little-endian host");

namespace drk {

using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

namespace detail {

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* p, std::size_t n, const std::string& what) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) throw IoError(what + ": truncated DTEN data");
}

template <class S>
constexpr std::uint8_t dtype_byte() { return std::is_same_v<S, float> ? 0 : 1; }

}  // namespace detail

template <class S>
void write_dten(std::ostream& os, const Tensor<S>& t) {
    detail::write_bytes(os, "DTEN", 4);
    const std::uint8_t version = 0x01;
    const std::uint8_t dtype = detail::dtype_byte<S>();
    const std::uint8_t rank = static_cast<std::uint8_t>(t.shape.rank());
    detail::write_bytes(os, &version, 1);
    detail::write_bytes(os, &dtype, 1);
    detail::write_bytes(os, &rank, 1);
    for (int i = 0; i < t.shape.rank(); ++i) {
        const std::uint32_t e = static_cast<std::uint32_t>(t.shape.dim(i));
        detail::write_bytes(os, &e, 4);
    }
    detail::write_bytes(os, t.ptr(), sizeof(S) * static_cast<std::size_t>(t.numel()));
}

inline AnyTensor read_dten(std::istream& is, const std::string& what) {
    char magic[4];
    detail::read_bytes(is, magic, 4, what);
    if (std::memcmp(magic, "DTEN", 4) != 0) throw IoError(what + ": bad DTEN magic");
    std::uint8_t version = 0, dtype = 0, rank = 0;
    detail::read_bytes(is, &version, 1, what);
    if (version != 0x01) throw IoError(what + ": unsupported DTEN version " + std::to_string(version));
    detail::read_bytes(is, &dtype, 1, what);
    if (dtype > 1) throw IoError(what + ": unknown DTEN dtype " + std::to_string(dtype));
    detail::read_bytes(is, &rank, 1, what);
    if (rank < 1 || rank > 4) throw IoError(what + ": DTEN rank " + std::to_string(rank) + " out of range");
    std::vector<long> dims;
    for (int i = 0; i < rank; ++i) {
        std::uint32_t e = 0;
        detail::read_bytes(is, &e, 4, what);
        if (e == 0) throw IoError(what + ": DTEN extent is zero");
        dims.push_back(static_cast<long>(e));
    }
    Shape shape(dims);
    if (dtype == 0) {
        Tensor<float> t;
        t.shape = shape;
        t.data.resize(shape.numel());
        detail::read_bytes(is, t.ptr(), 4 * static_cast<std::size_t>(t.numel()), what);
        return t;
    }
    Tensor<double> t;
    t.shape = shape;
    t.data.resize(shape.numel());
    detail::read_bytes(is, t.ptr(), 8 * static_cast<std::size_t>(t.numel()), what);
    return t;
}

template <class S>
void save_dten(const std::string& path, const Tensor<S>& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(path + ": cannot open for writing");
    write_dten(os, t);
    if (!os) throw IoError(path + ": write failed");
}

inline AnyTensor load_dten(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(path + ": cannot open");
    AnyTensor t = read_dten(is, path);
    // Reject trailing bytes so corruption does not pass silently.
    char extra;
    if (is.read(&extra, 1), is.gcount() != 0) throw IoError(path + ": trailing data after DTEN payload");
    return t;
}

// Load and convert to the requested scalar type.
template <class S>
Tensor<S> load_dten_as(const std::string& path) {
    AnyTensor any = load_dten(path);
    if (std::holds_alternative<Tensor<S>>(any)) return std::get<Tensor<S>>(any);
    if (std::holds_alternative<Tensor<float>>(any)) return std::get<Tensor<float>>(any).template cast<S>();
    return std::get<Tensor<double>>(any).template cast<S>();
}

}  // namespace drk
