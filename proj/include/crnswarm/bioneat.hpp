#pragma once
// BioNEAT-style generational baseline: population 50, speciation by a
// graph-edit-style topology distance with a compatibility threshold tuned
// toward a target species count, elitist survival within species, offspring
// via the shared mutation operators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "crnswarm/evaluator.hpp"
#include "crnswarm/mutation.hpp"

namespace crnswarm {

struct BioNeatOptions {
    long budget = 3000;
    int population = 50;
    int target_species = 20;
    double threshold0 = 0.0;      // 0 = auto: half the median pairwise distance of generation 0
    double threshold_gain = 1.2;  // multiplicative adjustment toward target_species
    double param_weight = 1.0;    // weight of the parameter term in the distance
    ModelKind model = ModelKind::full;
    int workers = 1;
    TopologyLimits limits = TopologyLimits::bioneat_defaults();
    MutationConfig mutation;
    TopoInitConfig topo_init;
    long max_resamples = 100000;
    std::function<void(const std::string&)> event_sink;
};

struct BioNeatIndividual {
    CrnGenome genome;
    double fitness = -std::numeric_limits<double>::infinity();
    long eval_index = -1;
    int species = -1;
};

/// Carried across generations (and across transfer phases).
struct BioNeatState {
    std::vector<BioNeatIndividual> population;  // evaluated, sorted by fitness desc
    std::vector<CrnGenome> representatives;     // one per live species
    double threshold = 0.0;                     // 0 until generation 0 sets it
    std::vector<double> best_history;           // best fitness after each generation
    std::vector<int> species_history;           // live species after each generation
};

namespace detail {

struct TemplateSig {
    int input;
    int output;
    int inhibitor;  // -1 when uninhibited

    friend bool operator<(const TemplateSig& a, const TemplateSig& b) {
        return std::tie(a.input, a.output, a.inhibitor) < std::tie(b.input, b.output, b.inhibitor);
    }
    friend bool operator==(const TemplateSig& a, const TemplateSig& b) {
        return std::tie(a.input, a.output, a.inhibitor) == std::tie(b.input, b.output, b.inhibitor);
    }
};

inline std::vector<std::pair<TemplateSig, double>> enabled_signatures(const CrnGenome& g) {
    std::vector<std::pair<TemplateSig, double>> sigs;
    for (const auto& t : g.templates)
        if (t.enabled) sigs.push_back({{t.input, t.output, t.inhibitor.value_or(-1)}, t.concentration});
    std::sort(sigs.begin(), sigs.end());
    return sigs;
}

inline double log_position(double v, double lo, double hi) {
    const double x = std::clamp(v, lo, hi);
    return std::log(x / lo) / std::log(hi / lo);
}

}  // namespace detail

/// Topology distance: count of templates (by input/output/inhibitor
/// signature) present in one genome but not the other, plus param_weight
/// times the mean log-scale concentration gap over signature-matched
/// templates. Zero iff the enabled reaction structures and concentrations
/// coincide.
inline double topology_distance(const CrnGenome& a, const CrnGenome& b, const ParamBounds& bounds,
                                double param_weight) {
    const auto sa = detail::enabled_signatures(a);
    const auto sb = detail::enabled_signatures(b);
    std::size_t i = 0, j = 0;
    int structural = 0;
    double param_sum = 0.0;
    int matched = 0;
    while (i < sa.size() && j < sb.size()) {
        if (sa[i].first < sb[j].first) {
            ++structural;
            ++i;
        } else if (sb[j].first < sa[i].first) {
            ++structural;
            ++j;
        } else {
            // equal-signature runs pair up in sorted-concentration order
            const detail::TemplateSig sig = sa[i].first;
            std::size_t ia = i, jb = j;
            while (ia < sa.size() && sa[ia].first == sig) ++ia;
            while (jb < sb.size() && sb[jb].first == sig) ++jb;
            const std::size_t na = ia - i, nb = jb - j;
            const std::size_t shared = std::min(na, nb);
            for (std::size_t k = 0; k < shared; ++k) {
                param_sum += std::abs(detail::log_position(sa[i + k].second, bounds.conc_min, bounds.conc_max) -
                                      detail::log_position(sb[j + k].second, bounds.conc_min, bounds.conc_max));
                ++matched;
            }
            structural += static_cast<int>(na + nb - 2 * shared);
            i = ia;
            j = jb;
        }
    }
    structural += static_cast<int>(sa.size() - i) + static_cast<int>(sb.size() - j);
    const double param_mean = matched > 0 ? param_sum / matched : 0.0;
    return structural + param_weight * param_mean;
}

namespace detail {

/// NEAT-style assignment: each individual joins the first species whose
/// representative is within the threshold, in representative order; a miss
/// founds a new species (immediately available to later individuals).
inline void speciate(std::vector<BioNeatIndividual>& pool, std::vector<CrnGenome>& reps, double threshold,
                     const BioNeatOptions& opt) {
    for (auto& ind : pool) {
        ind.species = -1;
        for (std::size_t s = 0; s < reps.size(); ++s) {
            if (topology_distance(ind.genome, reps[s], opt.limits.bounds, opt.param_weight) <= threshold) {
                ind.species = static_cast<int>(s);
                break;
            }
        }
        if (ind.species < 0) {
            ind.species = static_cast<int>(reps.size());
            reps.push_back(ind.genome);
        }
    }
}

/// Apportions `total` slots proportionally to `shares` with the largest
/// remainder method; deterministic tie-break toward lower index.
inline std::vector<int> largest_remainder(const std::vector<double>& shares, int total) {
    const std::size_t n = shares.size();
    std::vector<int> counts(n, 0);
    if (n == 0 || total <= 0) return counts;
    double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
    std::vector<double> ideal(n);
    for (std::size_t i = 0; i < n; ++i)
        ideal[i] = sum > 0.0 ? total * shares[i] / sum : static_cast<double>(total) / static_cast<double>(n);
    int assigned = 0;
    std::vector<double> remainder(n);
    for (std::size_t i = 0; i < n; ++i) {
        counts[i] = static_cast<int>(std::floor(ideal[i]));
        remainder[i] = ideal[i] - counts[i];
        assigned += counts[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; ++k) {
        ++counts[order[k % n]];
        ++assigned;
    }
    return counts;
}

inline void sort_by_fitness(std::vector<BioNeatIndividual>& pool) {
    std::stable_sort(pool.begin(), pool.end(), [](const BioNeatIndividual& a, const BioNeatIndividual& b) {
        if (a.fitness != b.fitness) return a.fitness > b.fitness;
        return a.eval_index < b.eval_index;
    });
}

}  // namespace detail

/// Runs BioNEAT generations covering eval indices [first_eval, first_eval +
/// n_evals), updating `state` in place and appending every record to `log`.
/// An empty population means generation 0 (topological inits); afterwards
/// each generation evaluates exactly `population` offspring (fewer only in a
/// final partial chunk). Returns the number of invalid offspring resampled.
inline long bioneat_span(const EvaluatorBase& evaluator, EvalLog& log, BioNeatState& state,
                         const BioNeatOptions& opt, std::uint64_t master_seed, int run_index, long first_eval,
                         long n_evals, ModelKind model) {
    if (opt.population < 1) throw std::invalid_argument("bioneat: population must be >= 1");
    long invalid = 0;
    long e = first_eval;
    const long end = first_eval + n_evals;
    while (e < end) {
        const long chunk = std::min<long>(opt.population, end - e);
        Rng rng(derive_seed(master_seed, {seed_stream::candidate, static_cast<std::uint64_t>(run_index),
                                          static_cast<std::uint64_t>(e)}));
        std::vector<EvalRequest> batch;
        batch.reserve(static_cast<std::size_t>(chunk));

        if (state.population.empty()) {
            for (long i = 0; i < chunk; ++i) {
                IdSource ids;
                batch.push_back(
                    {topological_init(opt.topo_init, opt.mutation, opt.limits, rng, ids), e + i, model});
            }
        } else {
            // offspring quotas: species share = mean rank score of its members
            const std::size_t n = state.population.size();
            std::vector<double> score(state.representatives.size(), 0.0);
            std::vector<int> members(state.representatives.size(), 0);
            for (std::size_t pos = 0; pos < n; ++pos) {
                const auto s = static_cast<std::size_t>(state.population[pos].species);
                score[s] += static_cast<double>(n - pos) / static_cast<double>(n);
                ++members[s];
            }
            for (std::size_t s = 0; s < score.size(); ++s)
                if (members[s] > 0) score[s] /= members[s];
            const std::vector<int> quota = detail::largest_remainder(score, static_cast<int>(chunk));

            std::vector<std::vector<std::size_t>> by_species(state.representatives.size());
            for (std::size_t pos = 0; pos < n; ++pos)
                by_species[static_cast<std::size_t>(state.population[pos].species)].push_back(pos);

            long idx = e;
            for (std::size_t s = 0; s < quota.size(); ++s) {
                for (int k = 0; k < quota[s]; ++k) {
                    bool made = false;
                    for (long attempt = 0; attempt < opt.max_resamples && !made; ++attempt) {
                        const auto& members_s = by_species[s];
                        const BioNeatIndividual& parent =
                            state.population[members_s[rng.below(members_s.size())]];
                        IdSource ids = IdSource::after(parent.genome);
                        CrnGenome child = mutate(parent.genome, opt.mutation, rng, ids).genome;
                        if (validate(child, opt.limits).valid()) {
                            batch.push_back({std::move(child), idx, model});
                            made = true;
                        } else {
                            ++invalid;
                            if (opt.event_sink)
                                opt.event_sink("eval " + std::to_string(idx) + ": invalid offspring resampled");
                        }
                    }
                    if (!made) throw std::runtime_error("bioneat: resample cap exceeded generating offspring");
                    ++idx;
                }
            }
        }

        const std::vector<EvalRecord> records = evaluate_batch(evaluator, batch, opt.workers);
        std::vector<BioNeatIndividual> pool = state.population;
        for (const EvalRecord& rec : records) {
            log.add(rec);
            pool.push_back({rec.genome, rec.outcome.fitness, rec.eval_index, -1});
        }

        // first generation fixes the compatibility threshold scale
        if (state.threshold <= 0.0) {
            if (opt.threshold0 > 0.0) {
                state.threshold = opt.threshold0;
            } else {
                std::vector<double> dists;
                for (std::size_t i = 0; i < pool.size(); ++i)
                    for (std::size_t j = i + 1; j < pool.size(); ++j)
                        dists.push_back(
                            topology_distance(pool[i].genome, pool[j].genome, opt.limits.bounds, opt.param_weight));
                state.threshold = dists.empty() ? 1.0 : std::max(1e-3, 0.5 * median(dists));
            }
        }

        detail::speciate(pool, state.representatives, state.threshold, opt);
        detail::sort_by_fitness(pool);

        // survivors: every species champion first, then global rank order
        std::vector<char> champion_seen(state.representatives.size(), 0);
        std::vector<char> taken(pool.size(), 0);
        std::vector<std::size_t> survivors;
        for (std::size_t pos = 0; pos < pool.size() && survivors.size() < static_cast<std::size_t>(opt.population);
             ++pos) {
            const auto s = static_cast<std::size_t>(pool[pos].species);
            if (!champion_seen[s]) {
                champion_seen[s] = 1;
                taken[pos] = 1;
                survivors.push_back(pos);
            }
        }
        for (std::size_t pos = 0; pos < pool.size() && survivors.size() < static_cast<std::size_t>(opt.population);
             ++pos) {
            if (!taken[pos]) {
                taken[pos] = 1;
                survivors.push_back(pos);
            }
        }
        std::sort(survivors.begin(), survivors.end());  // back to fitness order

        std::vector<BioNeatIndividual> next;
        next.reserve(survivors.size());
        for (std::size_t pos : survivors) next.push_back(pool[pos]);

        // renumber the surviving species and promote champions to representatives
        std::vector<int> remap(state.representatives.size(), -1);
        std::vector<CrnGenome> new_reps;
        for (auto& ind : next) {
            auto& slot = remap[static_cast<std::size_t>(ind.species)];
            if (slot < 0) {
                slot = static_cast<int>(new_reps.size());
                new_reps.push_back(ind.genome);  // fittest member: pool was fitness-sorted
            }
            ind.species = slot;
        }
        state.population = std::move(next);
        state.representatives = std::move(new_reps);

        const int n_species = static_cast<int>(state.representatives.size());
        if (n_species < opt.target_species)
            state.threshold = std::max(1e-3, state.threshold / opt.threshold_gain);
        else if (n_species > opt.target_species)
            state.threshold = std::min(1e6, state.threshold * opt.threshold_gain);

        state.best_history.push_back(state.population.empty() ? -std::numeric_limits<double>::infinity()
                                                              : state.population.front().fitness);
        state.species_history.push_back(n_species);
        e += chunk;
    }
    return invalid;
}

struct BioNeatOutcome {
    BioNeatState state;
    long invalid_candidates = 0;

    const BioNeatIndividual& best() const {
        if (state.population.empty()) throw std::runtime_error("bioneat: empty population");
        return state.population.front();
    }
};

inline BioNeatOutcome bioneat_baseline(const EvaluatorBase& evaluator, EvalLog& log, const BioNeatOptions& opt,
                                       std::uint64_t master_seed, int run_index = 0) {
    if (opt.budget < opt.population) throw std::invalid_argument("bioneat: budget below population size");
    BioNeatOutcome out;
    out.invalid_candidates =
        bioneat_span(evaluator, log, out.state, opt, master_seed, run_index, 0, opt.budget, opt.model);
    return out;
}

}  // namespace crnswarm
