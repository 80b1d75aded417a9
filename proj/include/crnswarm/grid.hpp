#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace crnswarm {

/// Row-major scalar field on a square arena. Index (ix, iy) with
/// ix = column (x axis), iy = row (y axis); linear index iy * nx + ix.
struct Field2D {
    int nx = 0;
    int ny = 0;
    std::vector<double> data;

    Field2D() = default;
    Field2D(int nx_, int ny_, double fill = 0.0) : nx(nx_), ny(ny_), data(static_cast<std::size_t>(nx_) * ny_, fill) {}

    double& at(int ix, int iy) { return data[static_cast<std::size_t>(iy) * nx + ix]; }
    double at(int ix, int iy) const { return data[static_cast<std::size_t>(iy) * nx + ix]; }
    std::size_t size() const { return data.size(); }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    double sum() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s;
    }
    double max() const {
        double m = data.empty() ? 0.0 : data[0];
        for (double v : data) m = std::max(m, v);
        return m;
    }
};

/// Maps continuous arena coordinates (mm) to cells. Cells are square;
/// cell (ix, iy) spans [ix*h, (ix+1)*h) x [iy*h, (iy+1)*h).
struct ArenaGeometry {
    double side_mm = 1.0;
    int cells = 160;

    double cell_size() const { return side_mm / cells; }
    double cell_area() const { return cell_size() * cell_size(); }

    int clamp_index(int i) const { return std::clamp(i, 0, cells - 1); }
    int cell_of(double coord) const { return clamp_index(static_cast<int>(coord / cell_size())); }
    double cell_center(int i) const { return (i + 0.5) * cell_size(); }
};

/// Concentration fields for every signal species of one network, stored in a
/// fixed species order so kinetics code can index by position.
struct GridState {
    ArenaGeometry geom;
    std::vector<int> species_ids;   // genome species id per slot
    std::vector<Field2D> fields;    // one per slot, same order

    GridState() = default;
    GridState(const ArenaGeometry& g, std::vector<int> ids) : geom(g), species_ids(std::move(ids)) {
        fields.assign(species_ids.size(), Field2D(geom.cells, geom.cells, 0.0));
    }

    int slot_of(int species_id) const {
        for (std::size_t i = 0; i < species_ids.size(); ++i)
            if (species_ids[i] == species_id) return static_cast<int>(i);
        throw std::out_of_range("GridState: unknown species id");
    }

    Field2D& field(int species_id) { return fields[static_cast<std::size_t>(slot_of(species_id))]; }
    const Field2D& field(int species_id) const { return fields[static_cast<std::size_t>(slot_of(species_id))]; }
};

/// Template surface density, factored as (per-template concentration) x
/// (shared spatial weight field). The full simulator rebuilds the weight
/// field from bead coverage each step; the surrogate uses weight == 1.
struct TemplateDensityMap {
    std::vector<int> template_ids;
    std::vector<double> concentrations;  // nM, per template slot
    Field2D weight;                      // dimensionless multiplier, shared by all templates

    double density(int slot, int ix, int iy) const { return concentrations[static_cast<std::size_t>(slot)] * weight.at(ix, iy); }
};

}  // namespace crnswarm
