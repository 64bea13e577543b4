#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "drk/errors.hpp"

namespace drk {

// Extents of a rank-1..4 tensor, row-major. Rank-4 follows the
// N,C,H,W layout convention used throughout the library.
class Shape {
  public:
    Shape() = default;

    Shape(std::initializer_list<long> ds) { assign(ds.begin(), ds.end()); }

    explicit Shape(const std::vector<long>& ds) { assign(ds.begin(), ds.end()); }

    int rank() const { return rank_; }

    long dim(int i) const {
        if (i < 0 || i >= rank_) throw ShapeError("axis " + std::to_string(i) + " out of range for rank " + std::to_string(rank_));
        return d_[static_cast<std::size_t>(i)];
    }

    long numel() const {
        long n = 1;
        for (int i = 0; i < rank_; ++i) n *= d_[static_cast<std::size_t>(i)];
        return n;
    }

    bool operator==(const Shape& o) const {
        if (rank_ != o.rank_) return false;
        for (int i = 0; i < rank_; ++i)
            if (d_[static_cast<std::size_t>(i)] != o.d_[static_cast<std::size_t>(i)]) return false;
        return true;
    }
    bool operator!=(const Shape& o) const { return !(*this == o); }

    // Rank-4 accessors.
    long n() const { return dim4(0); }
    long c() const { return dim4(1); }
    long h() const { return dim4(2); }
    long w() const { return dim4(3); }

    long index4(long n, long c, long h, long w) const { return ((n * d_[1] + c) * d_[2] + h) * d_[3] + w; }

    std::string str() const {
        std::ostringstream os;
        os << '[';
        for (int i = 0; i < rank_; ++i) {
            if (i) os << ',';
            os << d_[static_cast<std::size_t>(i)];
        }
        os << ']';
        return os.str();
    }

  private:
    template <class It>
    void assign(It first, It last) {
        rank_ = 0;
        for (It it = first; it != last; ++it) {
            if (rank_ >= 4) throw ShapeError("tensor rank exceeds 4");
            if (*it < 1) throw ShapeError("extent must be >= 1, got " + std::to_string(*it));
            d_[static_cast<std::size_t>(rank_++)] = *it;
        }
        if (rank_ == 0) throw ShapeError("tensor rank must be >= 1");
    }

    long dim4(int i) const {
        if (rank_ != 4) throw ShapeError("rank-4 accessor on shape " + str());
        return d_[static_cast<std::size_t>(i)];
    }

    std::array<long, 4> d_{1, 1, 1, 1};
    int rank_ = 0;
};

}  // namespace drk
