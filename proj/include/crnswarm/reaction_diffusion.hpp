#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <crnswarm/genome.hpp>
#include <crnswarm/grid.hpp>

namespace crnswarm {

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shared enzyme/template kinetics. Rates are per minute, concentrations nM.
/// source_rate is the production rate at a gradient source cell for the
/// reference 160x160 discretization; coarser grids scale it by cell area so
/// the injected amount of substance stays comparable.
struct KineticsParams {
    double k_pol = 0.05;        // 1/min, polymerase turnover scale
    double K_m = 20.0;          // nM, Michaelis constant of template activation
    double K_inh = 10.0;        // nM, inhibition half-constant
    double source_rate = 3000.0;  // nM/min injected per source cell at 160x160
    int reference_cells = 160;

    double source_rate_for(const ArenaGeometry& geom) const {
        const double ref = (geom.side_mm / reference_cells) * (geom.side_mm / reference_cells);
        return source_rate * ref / geom.cell_area();
    }
};

/// Fixed source positions for the two gradient inputs (fractions of side).
struct GradientSources {
    double x0 = 0.1, y0 = 0.1;  // first gradient species
    double x1 = 0.9, y1 = 0.1;  // second gradient species
};

/// Genome compiled to slot indices for the inner loops.
struct CompiledNetwork {
    std::vector<int> species_ids;          // slot -> genome species id
    std::vector<double> degradation;       // per slot, 1/min
    std::vector<double> diffusion;         // per slot, mm^2/min
    std::vector<int> gradient_slots;       // exactly two, in species-id order
    int anchor_slot = -1;

    struct Reaction {
        int template_slot;  // into TemplateDensityMap
        int input_slot;
        int output_slot;
        int inhibitor_slot;  // -1 if uninhibited
    };
    std::vector<Reaction> reactions;
    std::vector<int> template_ids;
    std::vector<double> template_concentrations;
};

inline CompiledNetwork compile_network(const CrnGenome& genome) {
    CompiledNetwork net;
    std::vector<SignalSpecies> species = genome.species;
    std::sort(species.begin(), species.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (const auto& s : species) {
        const int slot = static_cast<int>(net.species_ids.size());
        net.species_ids.push_back(s.id);
        net.degradation.push_back(s.degradation_rate);
        net.diffusion.push_back(s.diffusion_coeff);
        if (s.kind == SpeciesKind::gradient_input) net.gradient_slots.push_back(slot);
        if (s.kind == SpeciesKind::anchoring) net.anchor_slot = slot;
    }
    if (net.gradient_slots.size() != 2 || net.anchor_slot < 0)
        throw SimulationError("compile_network: genome lacks two gradient inputs and an anchoring species");

    auto slot_of = [&](int id) {
        for (std::size_t i = 0; i < net.species_ids.size(); ++i)
            if (net.species_ids[i] == id) return static_cast<int>(i);
        throw SimulationError("compile_network: dangling species reference");
    };
    std::vector<TemplateStrand> templates = genome.templates;
    std::sort(templates.begin(), templates.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (const auto& t : templates) {
        if (!t.enabled) continue;
        const int tslot = static_cast<int>(net.template_ids.size());
        net.template_ids.push_back(t.id);
        net.template_concentrations.push_back(t.concentration);
        net.reactions.push_back({tslot, slot_of(t.input), slot_of(t.output),
                                 t.inhibitor ? slot_of(*t.inhibitor) : -1});
    }
    return net;
}

/// Net reaction rate (nM/min) for every species at one cell.
/// `concentrations` and `rates` are indexed by slot. Negative input
/// concentrations indicate integrator failure upstream and throw.
inline void reaction_rates_at(const CompiledNetwork& net, const KineticsParams& kin,
                              const std::vector<double>& concentrations, const std::vector<double>& template_density,
                              const std::vector<double>& source_terms, std::vector<double>& rates) {
    const std::size_t n = net.species_ids.size();
    if (concentrations.size() != n)
        throw std::invalid_argument("reaction_rates_at: concentration vector size mismatch");
    rates.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (concentrations[i] < 0.0)
            throw SimulationError("reaction_rates_at: negative concentration for species id " +
                                  std::to_string(net.species_ids[i]));
        rates[i] = -net.degradation[i] * concentrations[i] + source_terms[i];
    }
    for (const auto& r : net.reactions) {
        const double in = concentrations[static_cast<std::size_t>(r.input_slot)];
        double rate = kin.k_pol * template_density[static_cast<std::size_t>(r.template_slot)] * in / (kin.K_m + in);
        if (r.inhibitor_slot >= 0) {
            const double inh = concentrations[static_cast<std::size_t>(r.inhibitor_slot)];
            rate *= kin.K_inh / (kin.K_inh + inh);
        }
        rates[static_cast<std::size_t>(r.output_slot)] += rate;
    }
}

/// Explicit zero-flux diffusion, edge-flux form (exactly conservative).
/// Automatically sub-steps so each sub-step satisfies D*dt/h^2 <= 0.25.
inline void diffuse_step(Field2D& f, double diffusion_coeff, double dt, double cell_size, Field2D& scratch) {
    if (diffusion_coeff <= 0.0 || dt <= 0.0) return;
    const double h2 = cell_size * cell_size;
    int substeps = static_cast<int>(std::ceil(diffusion_coeff * dt / (0.25 * h2)));
    substeps = std::max(substeps, 1);
    const double alpha = diffusion_coeff * (dt / substeps) / h2;

    const int nx = f.nx, ny = f.ny;
    scratch.nx = nx;
    scratch.ny = ny;
    scratch.data.resize(f.data.size());
    for (int s = 0; s < substeps; ++s) {
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const double c = f.at(ix, iy);
                double flux = 0.0;
                if (ix > 0) flux += f.at(ix - 1, iy) - c;
                if (ix < nx - 1) flux += f.at(ix + 1, iy) - c;
                if (iy > 0) flux += f.at(ix, iy - 1) - c;
                if (iy < ny - 1) flux += f.at(ix, iy + 1) - c;
                scratch.at(ix, iy) = c + alpha * flux;
            }
        }
        std::swap(f.data, scratch.data);
    }
}

/// Scratch buffers for integrate_step, reused across the steps of one
/// simulation. `active[i]` caches whether field i can hold a nonzero value;
/// a species whose field is identically zero and receives no production is
/// skipped entirely, which is exact (every skipped operation would only
/// write zeros). Do not share one workspace across different simulations.
struct RdWorkspace {
    std::vector<Field2D> rates;
    std::vector<char> active;
    std::vector<char> incoming;
    std::vector<char> process;
    Field2D scratch;
};

/// One reaction-diffusion step: explicit Euler on the reaction terms
/// (clamped at zero) followed by diffusion for every species.
/// Organized as whole-field sweeps; per cell the arithmetic matches
/// reaction_rates_at exactly (degradation+source first, then reaction
/// contributions in template order). Throws SimulationError on
/// non-finite or runaway concentrations.
inline void integrate_step(GridState& state, const CompiledNetwork& net, const KineticsParams& kin,
                           const TemplateDensityMap& templates, const GradientSources& sources, double dt,
                           RdWorkspace& ws) {
    const std::size_t ns = net.species_ids.size();
    const std::size_t cells = state.fields.empty() ? 0 : state.fields[0].size();
    const double src = kin.source_rate_for(state.geom);

    if (ws.rates.size() != ns) {
        ws.rates.assign(ns, Field2D(state.geom.cells, state.geom.cells, 0.0));
        ws.active.assign(ns, 1);  // unknown initial state: assume anything can be nonzero
    }

    // A species takes part this step if its field may be nonzero or it can
    // receive production (source cell, or a reaction from an active input).
    ws.incoming.assign(ns, 0);
    ws.incoming[static_cast<std::size_t>(net.gradient_slots[0])] = 1;
    ws.incoming[static_cast<std::size_t>(net.gradient_slots[1])] = 1;
    for (const auto& rx : net.reactions)
        if (ws.active[static_cast<std::size_t>(rx.input_slot)])
            ws.incoming[static_cast<std::size_t>(rx.output_slot)] = 1;
    ws.process.assign(ns, 0);
    for (std::size_t i = 0; i < ns; ++i) ws.process[i] = ws.active[i] || ws.incoming[i];
    const std::vector<char>& process = ws.process;

    for (std::size_t i = 0; i < ns; ++i) {
        if (!process[i]) continue;
        const double deg = net.degradation[i];
        const double* c = state.fields[i].data.data();
        double* r = ws.rates[i].data.data();
        for (std::size_t k = 0; k < cells; ++k) r[k] = -deg * c[k];
    }
    {
        const int sx0 = state.geom.cell_of(sources.x0 * state.geom.side_mm);
        const int sy0 = state.geom.cell_of(sources.y0 * state.geom.side_mm);
        const int sx1 = state.geom.cell_of(sources.x1 * state.geom.side_mm);
        const int sy1 = state.geom.cell_of(sources.y1 * state.geom.side_mm);
        ws.rates[static_cast<std::size_t>(net.gradient_slots[0])].at(sx0, sy0) += src;
        ws.rates[static_cast<std::size_t>(net.gradient_slots[1])].at(sx1, sy1) += src;
    }

    const double* w = templates.weight.data.data();
    for (const auto& rx : net.reactions) {
        if (!ws.active[static_cast<std::size_t>(rx.input_slot)]) continue;  // zero input: zero rate
        const double conc_t = net.template_concentrations[static_cast<std::size_t>(rx.template_slot)];
        const double* in = state.fields[static_cast<std::size_t>(rx.input_slot)].data.data();
        double* out = ws.rates[static_cast<std::size_t>(rx.output_slot)].data.data();
        if (rx.inhibitor_slot < 0) {
            for (std::size_t k = 0; k < cells; ++k)
                out[k] += kin.k_pol * (conc_t * w[k]) * in[k] / (kin.K_m + in[k]);
        } else {
            const double* inh = state.fields[static_cast<std::size_t>(rx.inhibitor_slot)].data.data();
            for (std::size_t k = 0; k < cells; ++k) {
                const double rate = kin.k_pol * (conc_t * w[k]) * in[k] / (kin.K_m + in[k]);
                out[k] += rate * (kin.K_inh / (kin.K_inh + inh[k]));
            }
        }
    }

    for (std::size_t i = 0; i < ns; ++i) {
        if (!process[i]) continue;
        double* c = state.fields[i].data.data();
        const double* r = ws.rates[i].data.data();
        double mx = 0.0;
        for (std::size_t k = 0; k < cells; ++k) {
            const double next = c[k] + dt * r[k];
            const double v = next > 0.0 ? next : 0.0;
            c[k] = v;
            if (v > mx) mx = v;
        }
        ws.active[i] = mx > 0.0 ? 1 : 0;
    }
    for (std::size_t i = 0; i < ns; ++i)
        if (ws.active[i]) diffuse_step(state.fields[i], net.diffusion[i], dt, state.geom.cell_size(), ws.scratch);

    for (std::size_t i = 0; i < ns; ++i) {
        if (!ws.active[i]) continue;
        const double m = state.fields[i].max();
        if (!std::isfinite(m) || m > 1e9)
            throw SimulationError("integrate_step: concentration blow-up for species id " +
                                  std::to_string(net.species_ids[i]));
    }
}

/// Cell-loop reference integrator used to pin down integrate_step's
/// semantics in tests; identical arithmetic, unoptimized.
inline void integrate_step_reference(GridState& state, const CompiledNetwork& net, const KineticsParams& kin,
                                     const TemplateDensityMap& templates, const GradientSources& sources, double dt,
                                     Field2D& scratch) {
    const int n = state.geom.cells;
    const std::size_t ns = net.species_ids.size();
    const double src = kin.source_rate_for(state.geom);

    const int sx0 = state.geom.cell_of(sources.x0 * state.geom.side_mm);
    const int sy0 = state.geom.cell_of(sources.y0 * state.geom.side_mm);
    const int sx1 = state.geom.cell_of(sources.x1 * state.geom.side_mm);
    const int sy1 = state.geom.cell_of(sources.y1 * state.geom.side_mm);

    std::vector<double> conc(ns), dens(net.template_ids.size()), rates(ns);
    std::vector<double> src_terms(ns, 0.0);
    std::vector<std::vector<double>> all_rates(ns, std::vector<double>(static_cast<std::size_t>(n) * n));
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            for (std::size_t i = 0; i < ns; ++i) conc[i] = state.fields[i].at(ix, iy);
            for (std::size_t t = 0; t < dens.size(); ++t)
                dens[t] = net.template_concentrations[t] * templates.weight.at(ix, iy);
            std::fill(src_terms.begin(), src_terms.end(), 0.0);
            if (ix == sx0 && iy == sy0) src_terms[static_cast<std::size_t>(net.gradient_slots[0])] += src;
            if (ix == sx1 && iy == sy1) src_terms[static_cast<std::size_t>(net.gradient_slots[1])] += src;
            reaction_rates_at(net, kin, conc, dens, src_terms, rates);
            for (std::size_t i = 0; i < ns; ++i)
                all_rates[i][static_cast<std::size_t>(iy) * n + ix] = rates[i];
        }
    }
    for (std::size_t i = 0; i < ns; ++i) {
        for (std::size_t k = 0; k < state.fields[i].data.size(); ++k) {
            const double next = state.fields[i].data[k] + dt * all_rates[i][k];
            state.fields[i].data[k] = next > 0.0 ? next : 0.0;
        }
    }
    for (std::size_t i = 0; i < ns; ++i)
        diffuse_step(state.fields[i], net.diffusion[i], dt, state.geom.cell_size(), scratch);

    for (std::size_t i = 0; i < ns; ++i) {
        const double m = state.fields[i].max();
        if (!std::isfinite(m) || m > 1e9)
            throw SimulationError("integrate_step: concentration blow-up for species id " +
                                  std::to_string(net.species_ids[i]));
    }
}

}  // namespace crnswarm
