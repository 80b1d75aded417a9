#pragma once
// Final-state rendering: bead positions over the target mask (binary PPM)
// and per-species concentration heat maps (binary PGM), plus CSV dumps for
// external tooling. Image dimensions are grid dimensions times `scale`.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crnswarm/fitness.hpp"
#include "crnswarm/full_sim.hpp"

namespace crnswarm {

struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 = grayscale (PGM), 3 = rgb (PPM)
    std::vector<std::uint8_t> pixels;

    std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * channels; }
};

inline void write_pnm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image '" + path + "'");
    out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << '\n' << 255 << '\n';
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

namespace detail {

inline void fill_block(Image& img, int cx, int cy, int scale, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (int y = cy * scale; y < (cy + 1) * scale; ++y)
        for (int x = cx * scale; x < (cx + 1) * scale; ++x) {
            std::uint8_t* p = img.at(x, y);
            p[0] = r;
            p[1] = g;
            p[2] = b;
        }
}

}  // namespace detail

/// Beads over the target mask. Target cells are light gray, background
/// white; free beads render dark blue, clustered beads red. Returns the
/// number of bead markers drawn (always one per bead; overlaps overdraw).
inline long render_beads(const SimulationResult& result, const ArenaGeometry& geom, const TargetShape& target,
                         int scale, Image& img) {
    if (scale < 1) throw std::invalid_argument("render_beads: scale must be >= 1");
    if (target.nx != geom.cells || target.ny != geom.cells)
        throw std::invalid_argument("render_beads: target grid does not match the arena");
    img.width = geom.cells * scale;
    img.height = geom.cells * scale;
    img.channels = 3;
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height * 3, 255);

    for (int y = 0; y < geom.cells; ++y)
        for (int x = 0; x < geom.cells; ++x)
            if (target.in_target(x, y)) detail::fill_block(img, x, y, scale, 205, 205, 205);

    std::vector<char> clustered(result.beads.size(), 0);
    for (const auto& c : result.clusters)
        for (int i : c) clustered[static_cast<std::size_t>(i)] = 1;

    long markers = 0;
    for (std::size_t i = 0; i < result.beads.size(); ++i) {
        const int cx = geom.cell_of(result.beads[i].x);
        const int cy = geom.cell_of(result.beads[i].y);
        if (clustered[i])
            detail::fill_block(img, cx, cy, scale, 200, 30, 30);
        else
            detail::fill_block(img, cx, cy, scale, 30, 30, 160);
        ++markers;
    }
    return markers;
}

/// Concentration heat map, linearly scaled so the field maximum maps to
/// white (an all-zero field renders black).
inline void render_field(const Field2D& field, int scale, Image& img) {
    if (scale < 1) throw std::invalid_argument("render_field: scale must be >= 1");
    img.width = field.nx * scale;
    img.height = field.ny * scale;
    img.channels = 1;
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);
    const double mx = field.max();
    if (mx <= 0.0) return;
    for (int y = 0; y < field.ny; ++y)
        for (int x = 0; x < field.nx; ++x) {
            const auto v = static_cast<std::uint8_t>(std::clamp(255.0 * field.at(x, y) / mx, 0.0, 255.0));
            for (int py = y * scale; py < (y + 1) * scale; ++py)
                for (int px = x * scale; px < (x + 1) * scale; ++px) img.pixels[static_cast<std::size_t>(py) * img.width + px] = v;
        }
}

inline void write_beads_csv(const SimulationResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    std::vector<int> cluster_of(result.beads.size(), -1);
    for (std::size_t c = 0; c < result.clusters.size(); ++c)
        for (int i : result.clusters[c]) cluster_of[static_cast<std::size_t>(i)] = static_cast<int>(c);
    out << "bead,x_mm,y_mm,cluster\n";
    for (std::size_t i = 0; i < result.beads.size(); ++i)
        out << i << ',' << result.beads[i].x << ',' << result.beads[i].y << ',' << cluster_of[i] << '\n';
}

inline void write_field_csv(const Field2D& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "x,y,value\n";
    for (int y = 0; y < field.ny; ++y)
        for (int x = 0; x < field.nx; ++x) out << x << ',' << y << ',' << field.at(x, y) << '\n';
}

/// Renders everything for one simulation result into `dir`: beads over the
/// target plus one heat map per species. Returns the written file names.
inline std::vector<std::string> emit_snapshot(const SimulationResult& result, const ArenaGeometry& geom,
                                              const TargetShape& target, int scale, const std::string& dir) {
    std::vector<std::string> written;
    Image img;
    render_beads(result, geom, target, scale, img);
    const std::string beads_path = dir + "/beads.ppm";
    write_pnm(img, beads_path);
    written.push_back(beads_path);
    for (std::size_t i = 0; i < result.fields.species_ids.size(); ++i) {
        render_field(result.fields.fields[i], scale, img);
        const std::string path = dir + "/species_" + std::to_string(result.fields.species_ids[i]) + ".pgm";
        write_pnm(img, path);
        written.push_back(path);
    }
    write_beads_csv(result, dir + "/beads.csv");
    written.push_back(dir + "/beads.csv");
    return written;
}

}  // namespace crnswarm
