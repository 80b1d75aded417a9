#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <crnswarm/full_sim.hpp>
#include <crnswarm/stats.hpp>
#include <crnswarm/surrogate_sim.hpp>

namespace crnswarm {

struct TargetShape {
    std::string name;  // T_shape | h_line | v_line | custom
    int nx = 0, ny = 0;
    std::vector<std::uint8_t> mask;  // 1 = target cell, row-major
    std::vector<double> distance;    // Euclidean distance (cell units) to nearest target cell
    int target_cells = 0;

    bool in_target(int ix, int iy) const { return mask[static_cast<std::size_t>(iy) * nx + ix] != 0; }
    double dist(int ix, int iy) const { return distance[static_cast<std::size_t>(iy) * nx + ix]; }
};

namespace detail {

constexpr double kEdtInf = 1e18;

/// 1-D squared-distance transform (lower envelope of parabolas). Inputs are
/// exact integers stored in doubles, so outputs are exact too.
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                   std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    d.resize(f.size());
    v.assign(f.size(), 0);
    z.assign(f.size() + 1, 0.0);
    int k = 0;
    v[0] = 0;
    z[0] = -kEdtInf;
    z[1] = kEdtInf;
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            const int p = v[static_cast<std::size_t>(k)];
            s = ((f[static_cast<std::size_t>(q)] + static_cast<double>(q) * q) -
                 (f[static_cast<std::size_t>(p)] + static_cast<double>(p) * p)) /
                (2.0 * q - 2.0 * p);
            if (s > z[static_cast<std::size_t>(k)]) break;
            --k;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = s;
        z[static_cast<std::size_t>(k) + 1] = kEdtInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[static_cast<std::size_t>(k) + 1] < static_cast<double>(q)) ++k;
        const int p = v[static_cast<std::size_t>(k)];
        d[static_cast<std::size_t>(q)] = static_cast<double>(q - p) * (q - p) + f[static_cast<std::size_t>(p)];
    }
}

/// Exact Euclidean distance map: two-pass separable transform on squared
/// distances, then one sqrt per cell.
inline std::vector<double> distance_map(const std::vector<std::uint8_t>& mask, int nx, int ny) {
    std::vector<double> sq(static_cast<std::size_t>(nx) * ny);
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = mask[i] ? 0.0 : kEdtInf;

    std::vector<double> col(static_cast<std::size_t>(ny)), dcol, z;
    std::vector<int> v;
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) col[static_cast<std::size_t>(iy)] = sq[static_cast<std::size_t>(iy) * nx + ix];
        edt_1d(col, dcol, v, z);
        for (int iy = 0; iy < ny; ++iy) sq[static_cast<std::size_t>(iy) * nx + ix] = dcol[static_cast<std::size_t>(iy)];
    }
    std::vector<double> row(static_cast<std::size_t>(nx)), drow;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) row[static_cast<std::size_t>(ix)] = sq[static_cast<std::size_t>(iy) * nx + ix];
        edt_1d(row, drow, v, z);
        for (int ix = 0; ix < nx; ++ix) sq[static_cast<std::size_t>(iy) * nx + ix] = drow[static_cast<std::size_t>(ix)];
    }
    for (double& d : sq) d = std::sqrt(d);
    return sq;
}

}  // namespace detail

inline TargetShape finalize_target(std::string name, int nx, int ny, std::vector<std::uint8_t> mask) {
    if (nx <= 0 || ny <= 0 || mask.size() != static_cast<std::size_t>(nx) * ny)
        throw std::invalid_argument("finalize_target: mask size mismatch");
    TargetShape t;
    t.name = std::move(name);
    t.nx = nx;
    t.ny = ny;
    t.target_cells = 0;
    for (auto m : mask)
        if (m) ++t.target_cells;
    if (t.target_cells == 0) throw std::invalid_argument("finalize_target: target mask is empty");
    t.distance = detail::distance_map(mask, nx, ny);
    t.mask = std::move(mask);
    return t;
}

/// Built-in targets on a square grid. The T is a full-width horizontal bar
/// along the top edge plus a centered vertical bar descending to the bottom,
/// both bar_mm wide; h_line / v_line are the bars alone. Cell membership is
/// decided by the cell center.
inline TargetShape make_target(const std::string& name, int cells, double side_mm = 1.0, double bar_mm = 0.20) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(cells) * cells, 0);
    const double h = side_mm / cells;
    const double mid_lo = 0.5 * (side_mm - bar_mm), mid_hi = 0.5 * (side_mm + bar_mm);
    for (int iy = 0; iy < cells; ++iy) {
        const double y = (iy + 0.5) * h;
        for (int ix = 0; ix < cells; ++ix) {
            const double x = (ix + 0.5) * h;
            bool in = false;
            if (name == "T_shape")
                in = y < bar_mm || (x >= mid_lo && x < mid_hi);
            else if (name == "h_line")
                in = y < bar_mm;
            else if (name == "v_line")
                in = x >= mid_lo && x < mid_hi;
            else
                throw std::invalid_argument("make_target: unknown target name '" + name + "'");
            if (in) mask[static_cast<std::size_t>(iy) * cells + ix] = 1;
        }
    }
    return finalize_target(name, cells, cells, std::move(mask));
}

/// Loads a PBM (P1 ascii or P4 binary) mask; black pixels (1) are target.
inline TargetShape load_target_pbm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_target_pbm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P1" && magic != "P4") throw std::runtime_error("load_target_pbm: not a PBM file: " + path);
    auto next_token = [&in]() {
        std::string tok;
        for (;;) {
            if (!(in >> tok)) throw std::runtime_error("load_target_pbm: truncated header");
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
    };
    const int nx = std::stoi(next_token());
    const int ny = std::stoi(next_token());
    if (nx <= 0 || ny <= 0) throw std::runtime_error("load_target_pbm: bad dimensions");
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx) * ny, 0);
    if (magic == "P1") {
        for (auto& m : mask) {
            int bit;
            if (!(in >> bit)) throw std::runtime_error("load_target_pbm: truncated pixels");
            m = bit ? 1 : 0;
        }
    } else {
        in.get();  // single whitespace after the header
        const int row_bytes = (nx + 7) / 8;
        std::vector<char> row(static_cast<std::size_t>(row_bytes));
        for (int iy = 0; iy < ny; ++iy) {
            if (!in.read(row.data(), row_bytes)) throw std::runtime_error("load_target_pbm: truncated pixels");
            for (int ix = 0; ix < nx; ++ix) {
                const auto byte = static_cast<unsigned char>(row[static_cast<std::size_t>(ix / 8)]);
                mask[static_cast<std::size_t>(iy) * nx + ix] = (byte >> (7 - ix % 8)) & 1;
            }
        }
    }
    return finalize_target("custom", nx, ny, std::move(mask));
}

struct FitnessParams {
    double r = 1.0;   // reward per occupied target cell
    double p = 0.2;   // penalty scale outside the target
    double a = 0.1;   // exponential distance scaling
    int n_retrials = 5;
    double presence_threshold = 10.0;  // nM, surrogate presence cutoff
};

/// Match-nomatch score: f_raw = sum_{T} r*B - sum_{not T} p*e^(a*d)*B,
/// normalized by r*|T| so 1.0 means every target cell occupied and nothing
/// outside. Accumulated in row-major cell order.
inline double match_nomatch(const std::vector<std::uint8_t>& presence, const TargetShape& target,
                            const FitnessParams& params) {
    if (presence.size() != target.mask.size())
        throw std::invalid_argument("match_nomatch: presence grid does not match target dimensions");
    double f_raw = 0.0;
    for (std::size_t i = 0; i < presence.size(); ++i) {
        if (!presence[i]) continue;
        if (target.mask[i])
            f_raw += params.r;
        else
            f_raw -= params.p * std::exp(params.a * target.distance[i]);
    }
    return f_raw / (params.r * static_cast<double>(target.target_cells));
}

/// How bead positions are turned into the boolean presence grid.
///   bead_centers    - cell true iff >= 1 bead center inside (literal rule)
///   bead_disks      - every cell within r_agg of any bead center
///   cluster_centers - bead_centers restricted to beads that are in clusters
///   cluster_disks   - bead_disks restricted to clustered beads
enum class PresenceMode { bead_centers, bead_disks, cluster_centers, cluster_disks };

inline const char* to_string(PresenceMode m) {
    switch (m) {
        case PresenceMode::bead_centers: return "bead_centers";
        case PresenceMode::bead_disks: return "bead_disks";
        case PresenceMode::cluster_centers: return "cluster_centers";
        case PresenceMode::cluster_disks: return "cluster_disks";
    }
    return "?";
}

inline PresenceMode presence_mode_from_string(const std::string& s) {
    if (s == "bead_centers") return PresenceMode::bead_centers;
    if (s == "bead_disks") return PresenceMode::bead_disks;
    if (s == "cluster_centers") return PresenceMode::cluster_centers;
    if (s == "cluster_disks") return PresenceMode::cluster_disks;
    throw std::invalid_argument("unknown presence mode '" + s + "'");
}

inline std::vector<std::uint8_t> presence_of(const SimulationResult& result, const ArenaGeometry& geom,
                                             PresenceMode mode, double r_agg_um) {
    std::vector<std::uint8_t> presence(static_cast<std::size_t>(geom.cells) * geom.cells, 0);
    const bool clustered_only = mode == PresenceMode::cluster_centers || mode == PresenceMode::cluster_disks;
    const bool disks = mode == PresenceMode::bead_disks || mode == PresenceMode::cluster_disks;

    std::vector<char> in_cluster(result.beads.size(), 0);
    if (clustered_only)
        for (const auto& c : result.clusters)
            for (int i : c) in_cluster[static_cast<std::size_t>(i)] = 1;

    Field2D cover;
    if (disks) {
        std::vector<BeadState> chosen;
        for (std::size_t i = 0; i < result.beads.size(); ++i)
            if (!clustered_only || in_cluster[i]) chosen.push_back(result.beads[i]);
        deposit_weights(chosen, geom, r_agg_um, cover);
        for (std::size_t i = 0; i < presence.size(); ++i) presence[i] = cover.data[i] > 0.0 ? 1 : 0;
        return presence;
    }
    for (std::size_t i = 0; i < result.beads.size(); ++i) {
        if (clustered_only && !in_cluster[i]) continue;
        const int ix = geom.cell_of(result.beads[i].x);
        const int iy = geom.cell_of(result.beads[i].y);
        presence[static_cast<std::size_t>(iy) * geom.cells + ix] = 1;
    }
    return presence;
}

/// Literal presence rule: cell true iff at least one bead center lies in it.
inline std::vector<std::uint8_t> presence_from_full(const SimulationResult& result, const ArenaGeometry& geom) {
    return presence_of(result, geom, PresenceMode::bead_centers, 0.0);
}

/// Surrogate presence: final anchoring-signal concentration above threshold.
inline std::vector<std::uint8_t> presence_from_surrogate(const SimulationResult& result, const CrnGenome& genome,
                                                         double threshold) {
    const int anchor = genome.anchor_id();
    const Field2D& field = result.fields.field(anchor);
    std::vector<std::uint8_t> presence(field.data.size(), 0);
    for (std::size_t i = 0; i < presence.size(); ++i) presence[i] = field.data[i] > threshold ? 1 : 0;
    return presence;
}

struct FitnessOutcome {
    double fitness = -std::numeric_limits<double>::infinity();
    std::vector<double> retrial_scores;
    std::string failure;  // empty on success

    bool ok() const { return failure.empty(); }
};

/// Full-model fitness: median match-nomatch score over n_retrials seeded
/// runs. Any simulation error fails the whole evaluation with a -inf
/// sentinel and the cause recorded.
inline FitnessOutcome evaluate_full(const CrnGenome& genome, const TargetShape& target, const FitnessParams& params,
                                    const FullSimConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                    PresenceMode mode = PresenceMode::bead_centers) {
    if (static_cast<int>(seeds.size()) != params.n_retrials)
        throw std::invalid_argument("evaluate_full: expected exactly n_retrials seeds");
    FitnessOutcome out;
    try {
        for (std::uint64_t seed : seeds) {
            const SimulationResult result = run_full(genome, cfg, seed);
            out.retrial_scores.push_back(
                match_nomatch(presence_of(result, cfg.geom, mode, cfg.beads.r_agg_um), target, params));
        }
    } catch (const SimulationError& e) {
        out.retrial_scores.clear();
        out.failure = e.what();
        return out;
    }
    out.fitness = median(out.retrial_scores);
    return out;
}

/// Surrogate fitness: one deterministic run, threshold presence, no retrials.
inline FitnessOutcome evaluate_surrogate(const CrnGenome& genome, const TargetShape& target,
                                         const FitnessParams& params, const FullSimConfig& cfg) {
    FitnessOutcome out;
    try {
        const SimulationResult result = run_surrogate(genome, cfg);
        out.retrial_scores.push_back(
            match_nomatch(presence_from_surrogate(result, genome, params.presence_threshold), target, params));
    } catch (const SimulationError& e) {
        out.failure = e.what();
        return out;
    }
    out.fitness = out.retrial_scores.front();
    return out;
}

}  // namespace crnswarm
