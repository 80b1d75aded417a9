#pragma once

#include <crnswarm/full_sim.hpp>

namespace crnswarm {

/// Deterministic surrogate: identical reaction-diffusion dynamics with the
/// template density spatially uniform at each template's grafted
/// concentration; no beads, no aggregation, no rng.
inline SimulationResult run_surrogate(const CrnGenome& genome, const FullSimConfig& cfg,
                                      const StepObserver& observer = {}) {
    const CompiledNetwork net = compile_network(genome);
    GridState state(cfg.geom, net.species_ids);
    RdWorkspace ws;

    TemplateDensityMap density;
    for (const auto& t : genome.templates) {
        if (!t.enabled) continue;
        density.template_ids.push_back(t.id);
        density.concentrations.push_back(t.concentration);
    }
    density.weight = Field2D(cfg.geom.cells, cfg.geom.cells, 1.0);

    static const std::vector<BeadState> no_beads;
    static const BondList no_bonds;
    for (int step = 0; step < cfg.steps; ++step) {
        integrate_step(state, net, cfg.kinetics, density, cfg.sources, cfg.dt, ws);
        if (observer) observer({step, state, no_beads, no_bonds});
    }

    SimulationResult result;
    result.fields = std::move(state);
    result.rng_draws = 0;
    return result;
}

}  // namespace crnswarm
