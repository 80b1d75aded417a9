#pragma once
// Surrogate-to-full transfer: optimize under the cheap surrogate first, then
// re-evaluate everything retained with the full model (charged to the full
// budget), rebuild the archive/population from full-model fitness, and
// continue optimizing under the full model.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crnswarm/bioneat.hpp"
#include "crnswarm/map_elites.hpp"

namespace crnswarm {

struct TransferBudgets {
    long surrogate_evals = 1500;
    long full_evals = 1500;

    long total() const { return surrogate_evals + full_evals; }
};

struct TransferMapElitesOutcome {
    EliteArchive archive;
    long invalid_candidates = 0;
    long reevaluated = 0;
};

inline TransferMapElitesOutcome transfer_map_elites(const EvaluatorBase& evaluator, EvalLog& log,
                                                    const MapElitesOptions& opt, const TransferBudgets& budgets,
                                                    std::uint64_t master_seed, int run_index = 0) {
    const int bin_capacity = opt.limits.max_templates - opt.limits.min_templates + 1;
    if (budgets.full_evals < bin_capacity)
        throw std::invalid_argument("transfer: full budget " + std::to_string(budgets.full_evals) +
                                    " cannot cover up to " + std::to_string(bin_capacity) + " retained elites");
    if (budgets.surrogate_evals < opt.batch_size)
        throw std::invalid_argument("transfer: surrogate budget below batch size");

    TransferMapElitesOutcome out{EliteArchive(opt.limits.min_templates, opt.limits.max_templates), 0, 0};
    EliteArchive surrogate_archive(opt.limits.min_templates, opt.limits.max_templates);
    out.invalid_candidates += map_elites_span(evaluator, log, surrogate_archive, opt, master_seed, run_index, 0,
                                              budgets.surrogate_evals, ModelKind::surrogate);

    // switch: every retained elite gets a fresh full-model evaluation
    std::vector<EvalRequest> reevals;
    long idx = budgets.surrogate_evals;
    for (int key : surrogate_archive.filled_keys())
        reevals.push_back({surrogate_archive.at(key)->genome, idx++, ModelKind::full});
    const std::vector<EvalRecord> records = evaluate_batch(evaluator, reevals, opt.workers);
    for (const EvalRecord& rec : records) {
        log.add(rec);
        out.archive.insert(rec.genome, rec.outcome.fitness, rec.eval_index);
    }
    out.reevaluated = static_cast<long>(records.size());

    const long phase2_start = budgets.surrogate_evals + out.reevaluated;
    const long phase2_evals = budgets.full_evals - out.reevaluated;
    out.invalid_candidates += map_elites_span(evaluator, log, out.archive, opt, master_seed, run_index, phase2_start,
                                              phase2_evals, ModelKind::full);
    return out;
}

struct TransferBioNeatOutcome {
    BioNeatState state;
    long invalid_candidates = 0;
    long reevaluated = 0;
};

inline TransferBioNeatOutcome transfer_bioneat(const EvaluatorBase& evaluator, EvalLog& log,
                                               const BioNeatOptions& opt, const TransferBudgets& budgets,
                                               std::uint64_t master_seed, int run_index = 0) {
    if (budgets.full_evals < opt.population)
        throw std::invalid_argument("transfer: full budget " + std::to_string(budgets.full_evals) +
                                    " cannot cover the retained population of " + std::to_string(opt.population));
    if (budgets.surrogate_evals < opt.population)
        throw std::invalid_argument("transfer: surrogate budget below population size");

    TransferBioNeatOutcome out;
    out.invalid_candidates += bioneat_span(evaluator, log, out.state, opt, master_seed, run_index, 0,
                                           budgets.surrogate_evals, ModelKind::surrogate);

    // switch: re-evaluate the whole retained population with the full model
    std::vector<EvalRequest> reevals;
    long idx = budgets.surrogate_evals;
    for (const BioNeatIndividual& ind : out.state.population)
        reevals.push_back({ind.genome, idx++, ModelKind::full});
    const std::vector<EvalRecord> records = evaluate_batch(evaluator, reevals, opt.workers);
    for (std::size_t i = 0; i < records.size(); ++i) {
        log.add(records[i]);
        out.state.population[i].fitness = records[i].outcome.fitness;
        out.state.population[i].eval_index = records[i].eval_index;
    }
    out.reevaluated = static_cast<long>(records.size());

    // full-model fitness reorders the population; champions become the new
    // representatives (species membership itself is unchanged)
    detail::sort_by_fitness(out.state.population);
    std::vector<int> remap(out.state.representatives.size(), -1);
    std::vector<CrnGenome> new_reps;
    for (auto& ind : out.state.population) {
        auto& slot = remap[static_cast<std::size_t>(ind.species)];
        if (slot < 0) {
            slot = static_cast<int>(new_reps.size());
            new_reps.push_back(ind.genome);
        }
        ind.species = slot;
    }
    out.state.representatives = std::move(new_reps);
    if (!out.state.population.empty()) out.state.best_history.push_back(out.state.population.front().fitness);

    const long phase2_start = budgets.surrogate_evals + out.reevaluated;
    const long phase2_evals = budgets.full_evals - out.reevaluated;
    out.invalid_candidates += bioneat_span(evaluator, log, out.state, opt, master_seed, run_index, phase2_start,
                                           phase2_evals, ModelKind::full);
    return out;
}

}  // namespace crnswarm
