#pragma once

// Dense value field over a centered square window of the integer lattice.
// The window covers [-half, half]^2 and grows geometrically on demand; sites
// outside the window read as zero. Dense storage keeps the toppling loop an
// order of magnitude faster than hashed sparse maps.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace stochpile {

struct LatticeBox {
    std::int32_t xmin = 0, ymin = 0, xmax = 0, ymax = 0;
    bool empty = true;
};

template <typename T>
class LatticeField {
public:
    LatticeField() = default;
    explicit LatticeField(std::int32_t half)
        : half_(half), side_(2 * half + 1),
          cells_(static_cast<std::size_t>(side_) * side_, T{}) {
        if (half < 0) throw std::domain_error("window radius must be >= 0");
    }

    std::int32_t half() const noexcept { return half_; }
    std::int32_t side() const noexcept { return side_; }

    bool contains(std::int32_t x, std::int32_t y) const noexcept {
        return std::abs(x) <= half_ && std::abs(y) <= half_;
    }

    std::size_t index(std::int32_t x, std::int32_t y) const noexcept {
        return static_cast<std::size_t>(y + half_) * side_ + (x + half_);
    }

    T at(std::int32_t x, std::int32_t y) const noexcept {
        return contains(x, y) ? cells_[index(x, y)] : T{};
    }

    // Caller guarantees (x, y) is inside the window.
    T& ref(std::int32_t x, std::int32_t y) { return cells_[index(x, y)]; }
    const T& ref(std::int32_t x, std::int32_t y) const { return cells_[index(x, y)]; }

    T* data() noexcept { return cells_.data(); }
    const T* data() const noexcept { return cells_.data(); }

    // Grow so that [-r, r]^2 fits, with 1.5x headroom to keep growth rare.
    void ensure_radius(std::int32_t r) {
        if (r <= half_) return;
        std::int32_t nh = std::max(r, static_cast<std::int32_t>(std::ceil(half_ * 1.5)));
        LatticeField<T> bigger(nh);
        for (std::int32_t y = -half_; y <= half_; ++y) {
            const T* src = &cells_[index(-half_, y)];
            T* dst = &bigger.cells_[bigger.index(-half_, y)];
            for (std::int32_t i = 0; i < side_; ++i) dst[i] = src[i];
        }
        *this = std::move(bigger);
    }

    template <typename F>
    void for_each_nonzero(F&& f) const {
        std::size_t i = 0;
        for (std::int32_t y = -half_; y <= half_; ++y)
            for (std::int32_t x = -half_; x <= half_; ++x, ++i)
                if (cells_[i] != T{}) f(x, y, cells_[i]);
    }

    LatticeBox nonzero_box() const {
        LatticeBox b;
        for_each_nonzero([&](std::int32_t x, std::int32_t y, const T&) {
            if (b.empty) {
                b = LatticeBox{x, y, x, y, false};
            } else {
                b.xmin = std::min(b.xmin, x);
                b.ymin = std::min(b.ymin, y);
                b.xmax = std::max(b.xmax, x);
                b.ymax = std::max(b.ymax, y);
            }
        });
        return b;
    }

    // Equality as finite-support maps; window geometry does not matter.
    friend bool operator==(const LatticeField& a, const LatticeField& b) {
        const std::int32_t h = std::max(a.half_, b.half_);
        for (std::int32_t y = -h; y <= h; ++y)
            for (std::int32_t x = -h; x <= h; ++x)
                if (a.at(x, y) != b.at(x, y)) return false;
        return true;
    }

private:
    std::int32_t half_ = 0;
    std::int32_t side_ = 1;
    std::vector<T> cells_ = {T{}};
};

}  // namespace stochpile
