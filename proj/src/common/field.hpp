#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace pmdflow {

/// Node-centred scalar on the O-grid, stored radial-major: element (i, j) sits
/// at i * n_theta + j. Only the n_theta distinct circumferential nodes are
/// stored; the periodic closing node is implied.
class Field2D {
public:
    Field2D() = default;
    Field2D(int n_radial, int n_theta, double value = 0.0)
        : nr_(n_radial), nt_(n_theta),
          v_(static_cast<std::size_t>(n_radial) * static_cast<std::size_t>(n_theta), value) {}

    int n_radial() const noexcept { return nr_; }
    int n_theta() const noexcept { return nt_; }
    std::size_t size() const noexcept { return v_.size(); }

    double& operator()(int i, int j) noexcept { return v_[idx(i, j)]; }
    double operator()(int i, int j) const noexcept { return v_[idx(i, j)]; }

    double* ring(int i) noexcept { return v_.data() + idx(i, 0); }
    const double* ring(int i) const noexcept { return v_.data() + idx(i, 0); }

    std::span<double> values() noexcept { return v_; }
    std::span<const double> values() const noexcept { return v_; }

    void fill(double value) { std::fill(v_.begin(), v_.end(), value); }

    bool same_shape(const Field2D& other) const noexcept {
        return nr_ == other.nr_ && nt_ == other.nt_;
    }

private:
    std::size_t idx(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(nt_) + static_cast<std::size_t>(j);
    }

    int nr_ = 0;
    int nt_ = 0;
    std::vector<double> v_;
};

inline int wrap_next(int j, int n) noexcept { return j + 1 == n ? 0 : j + 1; }
inline int wrap_prev(int j, int n) noexcept { return j == 0 ? n - 1 : j - 1; }

}  // namespace pmdflow
