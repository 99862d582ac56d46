#pragma once

// Shape rendering for stable configurations. Colour scale: white background
// at 0 grains, then two linear RGB ramps anchored at blue = 1 grain,
// green = 2M grains, red = 4M-1 grains. Output is binary PPM (P6), kept
// byte-stable so images can serve as golden files.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochpile/core.hpp"

namespace stochpile {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(Rgb a, Rgb b) noexcept = default;
};

struct CropBox {
    std::int32_t xmin = 0, ymin = 0, xmax = 0, ymax = 0;
};

inline Rgb colour_of(std::uint64_t grains, std::uint32_t m) {
    if (m == 0) throw std::domain_error("M must be >= 1");
    const std::uint64_t two_m = 2ull * m;
    if (grains >= 4ull * m) throw std::domain_error("colour_of: unstable site");
    if (grains == 0) return Rgb{255, 255, 255};
    // round to nearest, ties away from zero (lround), frozen for goldens
    const double span = static_cast<double>(two_m) - 1.0;
    if (grains <= two_m) {
        const double t = (static_cast<double>(grains) - 1.0) / span;
        return Rgb{0, static_cast<std::uint8_t>(std::lround(255.0 * t)),
                   static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)))};
    }
    const double t = (static_cast<double>(grains) - static_cast<double>(two_m)) / span;
    return Rgb{static_cast<std::uint8_t>(std::lround(255.0 * t)),
               static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t))), 0};
}

struct Image {
    std::int32_t width = 0, height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB

    Rgb at(std::int32_t col, std::int32_t row) const {
        const std::size_t i = 3 * (static_cast<std::size_t>(row) * width + col);
        return Rgb{pixels[i], pixels[i + 1], pixels[i + 2]};
    }
};

// One pixel per lattice site; image rows run from ymin (top) to ymax, so
// lattice y increases downward and x increases rightward. Default crop is the
// tight bounding box of positive sites plus a one-pixel margin.
inline Image render_shape(const Configuration& final, std::optional<CropBox> crop = {}) {
    if (!final.stable()) throw std::domain_error("render_shape: configuration is not stable");
    CropBox box;
    if (crop) {
        box = *crop;
        if (box.xmin > box.xmax || box.ymin > box.ymax)
            throw std::domain_error("render_shape: empty crop box");
    } else {
        const LatticeBox nz = final.grains().nonzero_box();
        if (nz.empty) {
            box = CropBox{-1, -1, 1, 1};
        } else {
            box = CropBox{nz.xmin - 1, nz.ymin - 1, nz.xmax + 1, nz.ymax + 1};
        }
    }
    Image img;
    img.width = box.xmax - box.xmin + 1;
    img.height = box.ymax - box.ymin + 1;
    img.pixels.resize(3 * static_cast<std::size_t>(img.width) * img.height);
    std::size_t i = 0;
    for (std::int32_t y = box.ymin; y <= box.ymax; ++y) {
        for (std::int32_t x = box.xmin; x <= box.xmax; ++x) {
            const Rgb c = colour_of(final.at(x, y), final.m());
            img.pixels[i++] = c.r;
            img.pixels[i++] = c.g;
            img.pixels[i++] = c.b;
        }
    }
    return img;
}

inline void write_ppm(const Image& img, std::ostream& out) {
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw std::runtime_error("ppm write failed");
}

inline void write_ppm_file(const Image& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_ppm(img, f);
}

}  // namespace stochpile
