#pragma once
// Canonical problem scales. "full" is the published setting; "desk" is the
// reduced setting used for end-to-end studies on a workstation.

#include <stdexcept>
#include <string>

#include "crnswarm/fitness.hpp"
#include "crnswarm/full_sim.hpp"

namespace crnswarm {

struct ScalePreset {
    std::string name;
    FullSimConfig sim;
    FitnessParams fitness;
    long budget = 3000;
    int runs = 16;
};

inline ScalePreset full_scale_preset() {
    ScalePreset p;
    p.name = "full";
    p.sim.geom = ArenaGeometry{1.0, 160};
    p.sim.dt = 0.1;
    p.sim.steps = 4000;
    p.sim.beads.count = 500;
    p.fitness.n_retrials = 5;
    p.budget = 3000;
    p.runs = 16;
    return p;
}

inline ScalePreset desk_scale_preset() {
    ScalePreset p;
    p.name = "desk";
    p.sim.geom = ArenaGeometry{1.0, 64};
    p.sim.dt = 0.1;
    p.sim.steps = 1500;
    p.sim.beads.count = 150;
    p.fitness.n_retrials = 3;
    p.budget = 600;
    p.runs = 8;
    return p;
}

inline ScalePreset preset_by_name(const std::string& name) {
    if (name == "full") return full_scale_preset();
    if (name == "desk") return desk_scale_preset();
    throw std::invalid_argument("unknown preset '" + name + "' (expected full or desk)");
}

/// Hand-designed 15-template controller for the T target (an illustration of
/// what a domain expert might write; shipped as data/expert_like.json). It is
/// intentionally larger than the evolvable topology space.
///
/// Layout logic, with sources at (0.1, 0.1) and (0.9, 0.1):
///   - C0/C1 fire near each source and anchor the horizontal bar through
///     C -> A. Short gradients (degradation 0.02 -> length scale ~0.16 mm)
///     keep those disks tight.
///   - K0/K1 are amplified distance gauges: they block B0/B1 close to their
///     own source, so B0/B1 mark intermediate distance.
///   - The stripe is where both bands overlap (around x = 0.5). AND is built
///     from paired NOTs whose carrier is the band species itself, so every
///     gate has signal wherever it must decide: J1 reports "B1 present";
///     N1 is produced from B0 unless J1 blocks it, so on the B0 band
///     N1 = NOT B1; the B0 -> S template is blocked by N1 and fires only
///     where B0 and B1 coexist (symmetrically for N0). S -> A then anchors
///     the lower stripe.
///   - No self-amplifying loops: anchor placement stays slaved to the
///     gradient geometry.
///
/// Amplitudes are deliberately low. With the default aggregation rates,
/// clusters persist wherever re-merging outpaces bond decay, which happens
/// at anchor concentrations of a few tenths of nM at desk bead density;
/// every stage is therefore kept below the polymerase Michaelis constant so
/// ratios survive the cascade, and the anchor peak sits only a few-fold
/// above that persistence level. Most of the score comes from the bar and
/// the lower stripe; the stripe top is beyond the reach of the gradients,
/// and single-inhibitor gates cannot carve the near-bar flanks away (their
/// response plateaus), which is what evolved controllers exploit better.
inline CrnGenome expert_like_genome() {
    const SpeciesDefaults d;
    CrnGenome g;
    auto species = [&g, &d](int id, SpeciesKind kind, double deg) {
        g.species.push_back({id, kind, deg, d.signal_diffusion});
    };
    species(0, SpeciesKind::gradient_input, 0.02);  // short gradient length scale
    species(1, SpeciesKind::gradient_input, 0.02);
    g.species[0].diffusion_coeff = d.gradient_diffusion;
    g.species[1].diffusion_coeff = d.gradient_diffusion;
    species(2, SpeciesKind::anchoring, 0.35);   // A
    species(3, SpeciesKind::internal, 0.30);    // C0: disk around source 0
    species(4, SpeciesKind::internal, 0.30);    // C1: disk around source 1
    species(5, SpeciesKind::internal, 0.15);    // B0: band around source 0
    species(6, SpeciesKind::internal, 0.15);    // B1: band around source 1
    species(7, SpeciesKind::internal, 0.15);    // S: vertical stripe
    g.species.back().diffusion_coeff = 8e-4;    // S plumes up the stripe
    species(8, SpeciesKind::inhibitor, 0.20);   // K0: distance gauge 0
    species(9, SpeciesKind::inhibitor, 0.20);   // K1: distance gauge 1
    species(10, SpeciesKind::inhibitor, 0.12);  // J0: "B0 present"
    species(11, SpeciesKind::inhibitor, 0.12);  // J1: "B1 present"
    species(12, SpeciesKind::inhibitor, 0.12);  // N0: NOT B0 (on the B1 band)
    species(13, SpeciesKind::inhibitor, 0.12);  // N1: NOT B1 (on the B0 band)

    auto tmpl = [&g](int id, int in, int out, double conc, std::optional<int> inh = std::nullopt) {
        g.templates.push_back({id, in, out, conc, inh, true});
    };
    tmpl(0, 0, 3, 15.0);        // G0 -> C0
    tmpl(1, 1, 4, 15.0);        // G1 -> C1
    tmpl(2, 3, 2, 45.0);        // C0 -> A         (bar anchor, left)
    tmpl(3, 4, 2, 45.0);        // C1 -> A         (bar anchor, right)
    tmpl(4, 0, 8, 400.0);       // G0 -> K0
    tmpl(5, 0, 5, 250.0, 8);    // G0 -> B0 | K0   (band 0)
    tmpl(6, 1, 9, 400.0);       // G1 -> K1
    tmpl(7, 1, 6, 250.0, 9);    // G1 -> B1 | K1   (band 1)
    tmpl(8, 6, 11, 200.0);      // B1 -> J1
    tmpl(9, 5, 13, 200.0, 11);  // B0 -> N1 | J1   (N1 = NOT B1 where B0 lives)
    tmpl(10, 5, 10, 200.0);     // B0 -> J0
    tmpl(11, 6, 12, 200.0, 10); // B1 -> N0 | J0   (N0 = NOT B0 where B1 lives)
    tmpl(12, 5, 7, 40.0, 13);   // B0 -> S | N1    (band 0 AND band 1)
    tmpl(13, 6, 7, 40.0, 12);   // B1 -> S | N0    (symmetric AND)
    tmpl(14, 7, 2, 3.0);        // S -> A          (stripe anchor)
    return g;
}

}  // namespace crnswarm
