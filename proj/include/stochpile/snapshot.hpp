#pragma once

// Text snapshot of a configuration, shared by tests, the CLI and the
// renderer:
//
//   stochpile-config v1
//   M <int>
//   bbox <xmin> <ymin> <xmax> <ymax>
//   <counts, one row per y from ymin to ymax, x left to right>

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "stochpile/core.hpp"

namespace stochpile {

inline void write_snapshot(const Configuration& config, std::ostream& out) {
    LatticeBox box = config.grains().nonzero_box();
    if (box.empty) box = LatticeBox{0, 0, 0, 0, false};
    out << "stochpile-config v1\n";
    out << "M " << config.m() << "\n";
    out << "bbox " << box.xmin << " " << box.ymin << " " << box.xmax << " " << box.ymax << "\n";
    for (std::int32_t y = box.ymin; y <= box.ymax; ++y) {
        for (std::int32_t x = box.xmin; x <= box.xmax; ++x) {
            if (x != box.xmin) out << ' ';
            out << config.at(x, y);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("snapshot write failed");
}

inline void write_snapshot_file(const Configuration& config, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    write_snapshot(config, f);
}

inline Configuration read_snapshot(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "stochpile-config v1")
        throw std::runtime_error("snapshot: missing 'stochpile-config v1' header");

    std::uint32_t m = 0;
    {
        if (!std::getline(in, line)) throw std::runtime_error("snapshot: truncated header");
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag >> m) || tag != "M" || m == 0)
            throw std::runtime_error("snapshot: bad M line");
    }
    std::int32_t xmin, ymin, xmax, ymax;
    {
        if (!std::getline(in, line)) throw std::runtime_error("snapshot: truncated header");
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag >> xmin >> ymin >> xmax >> ymax) || tag != "bbox" || xmin > xmax ||
            ymin > ymax)
            throw std::runtime_error("snapshot: bad bbox line");
    }

    const std::int32_t reach = std::max(
        {std::abs(xmin), std::abs(ymin), std::abs(xmax), std::abs(ymax), 1});
    Configuration config(m, reach);
    for (std::int32_t y = ymin; y <= ymax; ++y) {
        if (!std::getline(in, line))
            throw std::runtime_error("snapshot: missing row for y=" + std::to_string(y));
        std::istringstream ls(line);
        for (std::int32_t x = xmin; x <= xmax; ++x) {
            std::uint64_t count;
            if (!(ls >> count))
                throw std::runtime_error("snapshot: bad count at (" + std::to_string(x) + "," +
                                         std::to_string(y) + ")");
            if (count != 0) config.set(x, y, count);
        }
        std::uint64_t extra;
        if (ls >> extra) throw std::runtime_error("snapshot: excess values in row");
    }
    return config;
}

inline Configuration read_snapshot_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    return read_snapshot(f);
}

}  // namespace stochpile
