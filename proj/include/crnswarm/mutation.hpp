#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <crnswarm/genome.hpp>
#include <crnswarm/rng.hpp>

namespace crnswarm {

struct InitFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MutationKind { parameter, add_template, remove_template, add_signal, add_inhibition, none };

inline const char* to_string(MutationKind k) {
    switch (k) {
        case MutationKind::parameter: return "parameter";
        case MutationKind::add_template: return "add_template";
        case MutationKind::remove_template: return "remove_template";
        case MutationKind::add_signal: return "add_signal";
        case MutationKind::add_inhibition: return "add_inhibition";
        case MutationKind::none: return "none";
    }
    return "?";
}

struct MutationConfig {
    double p_parameter = 0.80;
    double p_add_template = 0.05;
    double p_remove_template = 0.05;
    double p_add_signal = 0.05;
    double p_add_inhibition = 0.05;
    double param_sigma = 0.3;  // std-dev of the log-space perturbation
    ParamBounds bounds;
    SpeciesDefaults species_defaults;

    bool probabilities_normalized() const {
        double s = p_parameter + p_add_template + p_remove_template + p_add_signal + p_add_inhibition;
        return std::abs(s - 1.0) < 1e-9;
    }
};

struct TopoInitConfig {
    int t_min = 7;
    int t_max = 13;
    int pmut_min = 0;
    int pmut_max = 10;
    int max_restarts = 10000;
};

struct MutationResult {
    CrnGenome genome;
    MutationKind applied = MutationKind::none;
};

namespace detail {

inline double log_uniform(Rng& rng, double lo, double hi) {
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

inline bool apply_parameter_mutation(CrnGenome& g, const MutationConfig& cfg, Rng& rng) {
    const std::vector<ParamRef> refs = evolvable_parameters(g);
    if (refs.empty()) return false;
    const ParamRef r = refs[rng.below(refs.size())];
    auto [lo, hi] = param_bounds_for(r.kind, cfg.bounds);
    const double factor = std::exp(rng.gaussian() * cfg.param_sigma);
    if (r.kind == ParamKind::template_concentration) {
        for (auto& t : g.templates)
            if (t.id == r.id) t.concentration = std::clamp(t.concentration * factor, lo, hi);
    } else {
        for (auto& s : g.species)
            if (s.id == r.id) s.degradation_rate = std::clamp(s.degradation_rate * factor, lo, hi);
    }
    return true;
}

inline bool apply_add_template(CrnGenome& g, const MutationConfig& cfg, Rng& rng, IdSource& ids) {
    std::vector<std::pair<int, int>> candidates;
    for (const auto& in : g.species) {
        for (const auto& out : g.species) {
            if (out.kind == SpeciesKind::gradient_input) continue;
            bool exists = false;
            for (const auto& t : g.templates)
                if (t.enabled && t.input == in.id && t.output == out.id) {
                    exists = true;
                    break;
                }
            if (!exists) candidates.emplace_back(in.id, out.id);
        }
    }
    if (candidates.empty()) return false;
    auto [in, out] = candidates[rng.below(candidates.size())];
    TemplateStrand t;
    t.id = ids.template_id();
    t.input = in;
    t.output = out;
    t.concentration = log_uniform(rng, cfg.bounds.conc_min, cfg.bounds.conc_max);
    g.templates.push_back(t);
    return true;
}

/// Deletes a template; if it carried an inhibitor, the now-targetless
/// inhibitor species and every template touching it are deleted too
/// (recursively), keeping the one-inhibitor-one-template invariant.
inline void erase_template_cascade(CrnGenome& g, int template_id) {
    std::vector<int> template_queue{template_id};
    while (!template_queue.empty()) {
        const int tid = template_queue.back();
        template_queue.pop_back();
        std::optional<int> orphan;
        for (auto it = g.templates.begin(); it != g.templates.end(); ++it) {
            if (it->id == tid) {
                orphan = it->inhibitor;
                g.templates.erase(it);
                break;
            }
        }
        if (!orphan) continue;
        const int vid = *orphan;
        for (auto it = g.species.begin(); it != g.species.end(); ++it)
            if (it->id == vid) {
                g.species.erase(it);
                break;
            }
        for (const auto& t : g.templates)
            if (t.input == vid || t.output == vid) template_queue.push_back(t.id);
    }
}

inline bool apply_remove_template(CrnGenome& g, Rng& rng) {
    std::vector<int> enabled;
    for (const auto& t : g.templates)
        if (t.enabled) enabled.push_back(t.id);
    if (enabled.empty()) return false;
    erase_template_cascade(g, static_cast<int>(enabled[rng.below(enabled.size())]));
    return true;
}

/// NEAT-style node insertion: disable i->o, add internal species m and the
/// two templates i->m, m->o carrying the original concentration.
inline bool apply_add_signal(CrnGenome& g, const MutationConfig& cfg, Rng& rng, IdSource& ids) {
    std::vector<int> enabled;
    for (const auto& t : g.templates)
        if (t.enabled) enabled.push_back(t.id);
    if (enabled.empty()) return false;
    const int tid = static_cast<int>(enabled[rng.below(enabled.size())]);

    SignalSpecies m;
    m.id = ids.species_id();
    m.kind = SpeciesKind::internal;
    m.degradation_rate = log_uniform(rng, cfg.bounds.deg_min, cfg.bounds.deg_max);
    m.diffusion_coeff = cfg.species_defaults.signal_diffusion;

    TemplateStrand* orig = nullptr;
    for (auto& t : g.templates)
        if (t.id == tid) orig = &t;
    orig->enabled = false;
    const int in = orig->input, out = orig->output;
    const double conc = orig->concentration;

    g.species.push_back(m);
    g.templates.push_back({ids.template_id(), in, m.id, conc, std::nullopt, true});
    g.templates.push_back({ids.template_id(), m.id, out, conc, std::nullopt, true});
    return true;
}

inline bool apply_add_inhibition(CrnGenome& g, const MutationConfig& cfg, Rng& rng, IdSource& ids) {
    std::vector<int> candidates;
    for (const auto& t : g.templates)
        if (t.enabled && !t.inhibitor) candidates.push_back(t.id);
    if (candidates.empty()) return false;
    std::vector<int> sources;
    for (const auto& s : g.species)
        if (s.kind != SpeciesKind::inhibitor) sources.push_back(s.id);
    if (sources.empty()) return false;

    const int tid = static_cast<int>(candidates[rng.below(candidates.size())]);
    const int sid = static_cast<int>(sources[rng.below(sources.size())]);

    SignalSpecies v;
    v.id = ids.species_id();
    v.kind = SpeciesKind::inhibitor;
    v.degradation_rate = log_uniform(rng, cfg.bounds.deg_min, cfg.bounds.deg_max);
    v.diffusion_coeff = cfg.species_defaults.signal_diffusion;
    g.species.push_back(v);

    for (auto& t : g.templates)
        if (t.id == tid) t.inhibitor = v.id;
    g.templates.push_back({ids.template_id(), sid, v.id,
                           log_uniform(rng, cfg.bounds.conc_min, cfg.bounds.conc_max), std::nullopt, true});
    return true;
}

inline bool apply_operator(CrnGenome& g, MutationKind kind, const MutationConfig& cfg, Rng& rng, IdSource& ids) {
    switch (kind) {
        case MutationKind::parameter: return apply_parameter_mutation(g, cfg, rng);
        case MutationKind::add_template: return apply_add_template(g, cfg, rng, ids);
        case MutationKind::remove_template: return apply_remove_template(g, rng);
        case MutationKind::add_signal: return apply_add_signal(g, cfg, rng, ids);
        case MutationKind::add_inhibition: return apply_add_inhibition(g, cfg, rng, ids);
        case MutationKind::none: return false;
    }
    return false;
}

constexpr MutationKind kAllKinds[5] = {MutationKind::parameter, MutationKind::add_template,
                                       MutationKind::remove_template, MutationKind::add_signal,
                                       MutationKind::add_inhibition};

}  // namespace detail

/// Applies exactly one mutation operator drawn from the configured
/// categorical distribution. Inapplicable draws are resampled; if no
/// operator applies at all the genome is returned unchanged with
/// applied == none. The result is well-formed but may violate topology
/// limits; callers re-validate.
inline MutationResult mutate(const CrnGenome& genome, const MutationConfig& cfg, Rng& rng, IdSource& ids) {
    const std::vector<double> weights = {cfg.p_parameter, cfg.p_add_template, cfg.p_remove_template,
                                         cfg.p_add_signal, cfg.p_add_inhibition};
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const MutationKind kind = detail::kAllKinds[rng.categorical(weights)];
        CrnGenome out = genome;
        if (detail::apply_operator(out, kind, cfg, rng, ids)) return {std::move(out), kind};
    }
    return {genome, MutationKind::none};
}

namespace detail {

inline bool within_type_caps(const CrnGenome& g, const TopologyLimits& limits) {
    const FeatureDescriptor f = count_features(g);
    int activation_species = 0;
    for (const auto& s : g.species)
        if (s.kind == SpeciesKind::anchoring || s.kind == SpeciesKind::internal) ++activation_species;
    return f.activation <= limits.max_activation_templates && f.inhibition <= limits.max_inhibition_templates &&
           activation_species <= limits.max_activation_signals;
}

/// One structural step for the initialization loop: samples among the four
/// topological operators (parameter mutation excluded, probabilities
/// renormalized) and rejects results that blow past the per-type caps, so
/// every template-count target in [t_min, t_max] is reachable.
inline bool topo_grow_step(CrnGenome& g, const MutationConfig& cfg, const TopologyLimits& limits, Rng& rng,
                           IdSource& ids) {
    const std::vector<double> weights = {cfg.p_add_template, cfg.p_remove_template, cfg.p_add_signal,
                                         cfg.p_add_inhibition};
    constexpr MutationKind kinds[4] = {MutationKind::add_template, MutationKind::remove_template,
                                       MutationKind::add_signal, MutationKind::add_inhibition};
    for (int attempt = 0; attempt < 200; ++attempt) {
        CrnGenome out = g;
        if (!apply_operator(out, kinds[rng.categorical(weights)], cfg, rng, ids)) continue;
        if (!within_type_caps(out, limits)) continue;
        g = std::move(out);
        return true;
    }
    return false;
}

inline void disable_random_template(CrnGenome& g, Rng& rng) {
    std::vector<int> enabled;
    for (const auto& t : g.templates)
        if (t.enabled) enabled.push_back(t.id);
    const int tid = static_cast<int>(enabled[rng.below(enabled.size())]);
    for (auto& t : g.templates)
        if (t.id == tid) t.enabled = false;
}

}  // namespace detail

/// Topological initialization: from the base individual, grow or disable
/// templates until the enabled count hits a uniformly drawn target in
/// [t_min, t_max], apply a uniformly drawn number of parameter mutations,
/// and restart the whole procedure if the result is invalid.
inline CrnGenome topological_init(const TopoInitConfig& tcfg, const MutationConfig& mcfg,
                                  const TopologyLimits& limits, Rng& rng, IdSource& ids) {
    if (tcfg.t_min < 1 || tcfg.t_min > tcfg.t_max)
        throw std::invalid_argument("topological_init: bad template-count range");
    if (tcfg.pmut_min < 0 || tcfg.pmut_min > tcfg.pmut_max)
        throw std::invalid_argument("topological_init: bad parameter-mutation range");

    for (int restart = 0; restart < tcfg.max_restarts; ++restart) {
        CrnGenome g = base_individual(mcfg.species_defaults);
        ids.ensure_covers(g);
        const int target = static_cast<int>(rng.uniform_int(tcfg.t_min, tcfg.t_max));
        bool stuck = false;
        for (int step = 0; step < 10000; ++step) {
            const int total = count_features(g).total;
            if (total == target) break;
            if (total > target) {
                detail::disable_random_template(g, rng);
            } else if (!detail::topo_grow_step(g, mcfg, limits, rng, ids)) {
                stuck = true;
                break;
            }
        }
        if (stuck || count_features(g).total != target) continue;

        const int pmut = static_cast<int>(rng.uniform_int(tcfg.pmut_min, tcfg.pmut_max));
        for (int i = 0; i < pmut; ++i) detail::apply_parameter_mutation(g, mcfg, rng);

        if (validate(g, limits).valid()) return g;
    }
    throw InitFailure("topological_init: restart cap exceeded");
}

enum class InitTiming { interleaved, prefix };

/// True when evaluation `index` of a run should consume a fresh topological
/// initialization instead of a mutation of a sampled elite. Interleaved
/// timing spreads ceil(fraction * budget) inits evenly over the run and is
/// independent of the budget, so it composes across transfer phases.
inline bool topo_init_scheduled(std::uint64_t index, double fraction, InitTiming timing, std::uint64_t budget) {
    if (fraction <= 0.0) return false;
    if (fraction >= 1.0) return true;
    if (timing == InitTiming::prefix) {
        const auto count = static_cast<std::uint64_t>(std::ceil(fraction * static_cast<double>(budget)));
        return index < count;
    }
    const auto before = static_cast<std::uint64_t>(std::ceil(fraction * static_cast<double>(index)));
    const auto after = static_cast<std::uint64_t>(std::ceil(fraction * static_cast<double>(index + 1)));
    return after > before;
}

/// Full schedule for a run: schedule[i] == 1 marks a topological init.
inline std::vector<std::uint8_t> init_schedule(std::uint64_t budget, double fraction,
                                               InitTiming timing = InitTiming::interleaved) {
    std::vector<std::uint8_t> s(budget, 0);
    for (std::uint64_t i = 0; i < budget; ++i)
        s[i] = topo_init_scheduled(i, fraction, timing, budget) ? 1 : 0;
    return s;
}

}  // namespace crnswarm
