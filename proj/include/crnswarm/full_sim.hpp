#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <utility>
#include <vector>

#include <crnswarm/genome.hpp>
#include <crnswarm/grid.hpp>
#include <crnswarm/reaction_diffusion.hpp>
#include <crnswarm/rng.hpp>

namespace crnswarm {

struct BeadState {
    double x = 0.0;  // mm
    double y = 0.0;  // mm
};

struct BeadParams {
    int count = 500;
    double r_agg_um = 50.0;    // aggregation/production radius
    double r_motion_um = 5.0;  // size fed to the Stokes-Einstein formula
};

struct PhysicsParams {
    double temperature = 316.15;        // K (43 C)
    double viscosity = 6.5e-4;          // Pa*s, water at 43 C
    double k_boltzmann = 1.380649e-23;  // J/K
    double k_agg = 0.01;                // /min per nM of anchoring signal
    double k_deagg = 0.01;              // /min per bond
    // The source formula divides by 6*pi*d*eta with d the bead size; classical
    // Stokes-Einstein would use the radius d/2. Default keeps the literal form.
    bool classical_radius_form = false;
};

/// Stokes-Einstein diffusion coefficient in mm^2/min for a bead of the given
/// size (um). With classical_radius_form the size is halved first.
inline double diffusion_coefficient(double size_um, const PhysicsParams& p) {
    double d_m = size_um * 1e-6;
    if (p.classical_radius_form) d_m *= 0.5;
    const double d_m2_per_s = p.k_boltzmann * p.temperature / (6.0 * std::numbers::pi * d_m * p.viscosity);
    return d_m2_per_s * 1e6 * 60.0;
}

struct FullSimConfig {
    ArenaGeometry geom{1.0, 160};
    double dt = 0.1;  // min
    int steps = 4000;
    BeadParams beads;
    PhysicsParams physics;
    KineticsParams kinetics;
    GradientSources sources;
};

using BondList = std::vector<std::pair<int, int>>;  // bead index pairs, first < second

/// Connected components of the bond graph, smallest member first inside each
/// component and components ordered by smallest member. Singletons excluded.
inline std::vector<std::vector<int>> bond_components(int bead_count, const BondList& bonds) {
    std::vector<int> parent(static_cast<std::size_t>(bead_count));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    };
    for (const auto& [a, b] : bonds) {
        const int ra = find(a), rb = find(b);
        if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
    }
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(bead_count));
    for (int i = 0; i < bead_count; ++i) groups[static_cast<std::size_t>(find(i))].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& g : groups)
        if (g.size() >= 2) out.push_back(std::move(g));
    return out;
}

namespace detail {

inline double reflect_into(double v, double side) {
    // Fold into [0, 2*side) then mirror the upper half.
    if (side <= 0.0) return 0.0;
    v = std::fmod(v, 2.0 * side);
    if (v < 0.0) v += 2.0 * side;
    return v < side ? v : 2.0 * side - v;
}

/// Free beads plus clusters, each with centroid, member list and size N.
struct Entity {
    std::vector<int> members;
    double cx = 0.0, cy = 0.0;
    int size() const { return static_cast<int>(members.size()); }
};

inline std::vector<Entity> build_entities(const std::vector<BeadState>& beads, const BondList& bonds) {
    const auto comps = bond_components(static_cast<int>(beads.size()), bonds);
    std::vector<char> clustered(beads.size(), 0);
    for (const auto& c : comps)
        for (int i : c) clustered[static_cast<std::size_t>(i)] = 1;
    std::vector<Entity> entities;
    std::size_t ci = 0;
    // Ordered by smallest member index so the rng draw order is canonical.
    for (int i = 0; i < static_cast<int>(beads.size()); ++i) {
        if (ci < comps.size() && comps[ci][0] == i) {
            Entity e;
            e.members = comps[ci++];
            for (int m : e.members) {
                e.cx += beads[static_cast<std::size_t>(m)].x;
                e.cy += beads[static_cast<std::size_t>(m)].y;
            }
            e.cx /= e.size();
            e.cy /= e.size();
            entities.push_back(std::move(e));
        } else if (!clustered[static_cast<std::size_t>(i)]) {
            entities.push_back({{i}, beads[static_cast<std::size_t>(i)].x, beads[static_cast<std::size_t>(i)].y});
        }
    }
    return entities;
}

}  // namespace detail

/// Brownian update: free beads jitter with D(r_motion), clusters of N move
/// rigidly with D(N * r_motion); all positions reflect at the walls.
inline void brownian_step(std::vector<BeadState>& beads, const BondList& bonds, const FullSimConfig& cfg, double dt,
                          Rng& rng) {
    if (dt <= 0.0) return;
    const double side = cfg.geom.side_mm;
    const auto entities = detail::build_entities(beads, bonds);
    for (const auto& e : entities) {
        const double d_coeff = diffusion_coefficient(e.size() * cfg.beads.r_motion_um, cfg.physics);
        const double sigma = std::sqrt(2.0 * d_coeff * dt);
        const double dx = rng.gaussian() * sigma;
        const double dy = rng.gaussian() * sigma;
        for (int m : e.members) {
            auto& b = beads[static_cast<std::size_t>(m)];
            b.x = detail::reflect_into(b.x + dx, side);
            b.y = detail::reflect_into(b.y + dy, side);
        }
    }
}

/// Gillespie-style aggregation/disaggregation. Every entity pair in contact
/// (centroid distance within the sum of their N-scaled aggregation radii)
/// draws an exponential waiting time with propensity k_agg * [anchor] at the
/// pair midpoint and merges when it fires within dt; bonds present on entry
/// independently break with propensity k_deagg. Merges are transitive.
inline BondList aggregation_step(const std::vector<BeadState>& beads, const BondList& bonds,
                                 const Field2D& anchor_field, const ArenaGeometry& geom, const FullSimConfig& cfg,
                                 double dt, Rng& rng) {
    const auto entities = detail::build_entities(beads, bonds);
    const double r_agg_mm = cfg.beads.r_agg_um * 1e-3;

    BondList next = bonds;
    for (std::size_t i = 0; i < entities.size(); ++i) {
        for (std::size_t j = i + 1; j < entities.size(); ++j) {
            const auto& a = entities[i];
            const auto& b = entities[j];
            const double contact = (a.size() + b.size()) * r_agg_mm;
            const double dx = a.cx - b.cx, dy = a.cy - b.cy;
            if (dx * dx + dy * dy > contact * contact) continue;
            const double mx = 0.5 * (a.cx + b.cx), my = 0.5 * (a.cy + b.cy);
            const double anchor = anchor_field.at(geom.cell_of(mx), geom.cell_of(my));
            const double tau = rng.exponential(cfg.physics.k_agg * anchor);
            if (tau >= dt) continue;
            // Bond the closest bead pair across the two entities.
            int best_a = a.members[0], best_b = b.members[0];
            double best = std::numeric_limits<double>::infinity();
            for (int ma : a.members) {
                for (int mb : b.members) {
                    const double ex = beads[static_cast<std::size_t>(ma)].x - beads[static_cast<std::size_t>(mb)].x;
                    const double ey = beads[static_cast<std::size_t>(ma)].y - beads[static_cast<std::size_t>(mb)].y;
                    const double d2 = ex * ex + ey * ey;
                    if (d2 < best) {
                        best = d2;
                        best_a = ma;
                        best_b = mb;
                    }
                }
            }
            next.emplace_back(std::min(best_a, best_b), std::max(best_a, best_b));
        }
    }
    // Break tests apply to the bonds that existed when the step began.
    BondList survivors;
    survivors.reserve(next.size());
    std::size_t entry = bonds.size();
    for (std::size_t k = 0; k < next.size(); ++k) {
        if (k < entry && rng.exponential(cfg.physics.k_deagg) < dt) continue;
        survivors.push_back(next[k]);
    }
    std::sort(survivors.begin(), survivors.end());
    survivors.erase(std::unique(survivors.begin(), survivors.end()), survivors.end());
    return survivors;
}

/// Bead coverage count per cell: how many beads have this cell's center
/// within their aggregation radius. Template density at a cell is this
/// weight times the template's grafted concentration.
inline void deposit_weights(const std::vector<BeadState>& beads, const ArenaGeometry& geom, double r_agg_um,
                            Field2D& weight) {
    weight.nx = geom.cells;
    weight.ny = geom.cells;
    weight.data.assign(static_cast<std::size_t>(geom.cells) * geom.cells, 0.0);
    const double r = r_agg_um * 1e-3;
    const double r2 = r * r;
    for (const auto& b : beads) {
        const int lo_x = geom.clamp_index(static_cast<int>((b.x - r) / geom.cell_size()));
        const int hi_x = geom.clamp_index(static_cast<int>((b.x + r) / geom.cell_size()));
        const int lo_y = geom.clamp_index(static_cast<int>((b.y - r) / geom.cell_size()));
        const int hi_y = geom.clamp_index(static_cast<int>((b.y + r) / geom.cell_size()));
        for (int iy = lo_y; iy <= hi_y; ++iy) {
            const double dy = geom.cell_center(iy) - b.y;
            for (int ix = lo_x; ix <= hi_x; ++ix) {
                const double dx = geom.cell_center(ix) - b.x;
                if (dx * dx + dy * dy <= r2) weight.at(ix, iy) += 1.0;
            }
        }
    }
}

inline TemplateDensityMap deposit_templates(const std::vector<BeadState>& beads, const CrnGenome& genome,
                                            const ArenaGeometry& geom, double r_agg_um) {
    TemplateDensityMap map;
    for (const auto& t : genome.templates) {
        if (!t.enabled) continue;
        map.template_ids.push_back(t.id);
        map.concentrations.push_back(t.concentration);
    }
    deposit_weights(beads, geom, r_agg_um, map.weight);
    return map;
}

struct SimulationResult {
    GridState fields;
    std::vector<BeadState> beads;  // empty in surrogate runs
    BondList bonds;
    std::vector<std::vector<int>> clusters;
    std::uint64_t rng_draws = 0;
};

/// Per-step view handed to the observer (snapshots, live inspection).
struct StepView {
    int step;
    const GridState& fields;
    const std::vector<BeadState>& beads;
    const BondList& bonds;
};
using StepObserver = std::function<void(const StepView&)>;

inline SimulationResult run_full(const CrnGenome& genome, const FullSimConfig& cfg, std::uint64_t seed,
                                 const StepObserver& observer = {}) {
    Rng rng(seed);
    const CompiledNetwork net = compile_network(genome);

    std::vector<BeadState> beads(static_cast<std::size_t>(cfg.beads.count));
    for (auto& b : beads) {
        b.x = rng.uniform01() * cfg.geom.side_mm;
        b.y = rng.uniform01() * cfg.geom.side_mm;
    }
    BondList bonds;

    GridState state(cfg.geom, net.species_ids);
    RdWorkspace ws;
    TemplateDensityMap density;
    for (const auto& t : genome.templates) {
        if (!t.enabled) continue;
        density.template_ids.push_back(t.id);
        density.concentrations.push_back(t.concentration);
    }

    const int anchor_slot = net.anchor_slot;
    for (int step = 0; step < cfg.steps; ++step) {
        deposit_weights(beads, cfg.geom, cfg.beads.r_agg_um, density.weight);
        integrate_step(state, net, cfg.kinetics, density, cfg.sources, cfg.dt, ws);
        brownian_step(beads, bonds, cfg, cfg.dt, rng);
        bonds = aggregation_step(beads, bonds, state.fields[static_cast<std::size_t>(anchor_slot)], cfg.geom, cfg,
                                 cfg.dt, rng);
        if (observer) observer({step, state, beads, bonds});
    }

    SimulationResult result;
    result.clusters = bond_components(static_cast<int>(beads.size()), bonds);
    result.fields = std::move(state);
    result.beads = std::move(beads);
    result.bonds = std::move(bonds);
    result.rng_draws = rng.draw_count();
    return result;
}

}  // namespace crnswarm
