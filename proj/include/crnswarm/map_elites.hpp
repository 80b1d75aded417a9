#pragma once
// MAP-Elites over CRN topologies, binned by enabled-template count.
// Candidates are generated serially from a per-batch RNG (so any worker
// count gives the same run) and archive updates happen at batch boundaries.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crnswarm/archive.hpp"
#include "crnswarm/evaluator.hpp"
#include "crnswarm/mutation.hpp"

namespace crnswarm {

struct MapElitesOptions {
    long budget = 3000;
    int batch_size = 50;
    double init_fraction = 0.10;  // share of evaluations spent on fresh topological inits
    InitTiming init_timing = InitTiming::interleaved;
    ModelKind model = ModelKind::full;
    int workers = 1;
    TopologyLimits limits = TopologyLimits::map_elites_defaults();
    MutationConfig mutation;
    TopoInitConfig topo_init;
    long max_resamples = 100000;  // guard for the invalid-candidate loop
    std::function<void(const std::string&)> event_sink;  // optional progress/diagnostic messages
};

namespace detail {

/// One candidate for evaluation `eval_index`: a fresh topological init when
/// the schedule (or an empty archive) says so, otherwise a mutation of an
/// elite drawn uniformly over filled bins. Candidates that fail validation
/// are resampled without consuming budget.
inline CrnGenome sample_candidate(const EliteArchive& archive, const MapElitesOptions& opt, Rng& rng, long eval_index,
                                  long& invalid_count) {
    for (long attempt = 0; attempt < opt.max_resamples; ++attempt) {
        CrnGenome g;
        if (archive.empty() || topo_init_scheduled(static_cast<std::uint64_t>(eval_index), opt.init_fraction,
                                                   opt.init_timing, static_cast<std::uint64_t>(opt.budget))) {
            IdSource ids;
            g = topological_init(opt.topo_init, opt.mutation, opt.limits, rng, ids);
        } else {
            const std::vector<int> keys = archive.filled_keys();
            const CrnGenome& parent = archive.at(keys[rng.below(keys.size())])->genome;
            IdSource ids = IdSource::after(parent);
            g = mutate(parent, opt.mutation, rng, ids).genome;
        }
        if (validate(g, opt.limits).valid()) return g;
        ++invalid_count;
        if (opt.event_sink) opt.event_sink("eval " + std::to_string(eval_index) + ": invalid candidate resampled");
    }
    throw std::runtime_error("map_elites: resample cap exceeded while generating a valid candidate");
}

}  // namespace detail

/// Runs MAP-Elites batches covering eval indices [first_eval, first_eval +
/// n_evals), updating `archive` in place and appending every record to
/// `log`. The batch RNG is derived from the batch's first eval index, so
/// spans compose (transfer pipeline) and re-running a prefix reproduces it.
/// Returns the number of invalid candidates that were resampled.
inline long map_elites_span(const EvaluatorBase& evaluator, EvalLog& log, EliteArchive& archive,
                            const MapElitesOptions& opt, std::uint64_t master_seed, int run_index, long first_eval,
                            long n_evals, ModelKind model) {
    if (opt.batch_size < 1) throw std::invalid_argument("map_elites: batch_size must be >= 1");
    long invalid = 0;
    long e = first_eval;
    const long end = first_eval + n_evals;
    while (e < end) {
        const long chunk = std::min<long>(opt.batch_size, end - e);
        Rng rng(derive_seed(master_seed, {seed_stream::candidate, static_cast<std::uint64_t>(run_index),
                                          static_cast<std::uint64_t>(e)}));
        std::vector<EvalRequest> batch;
        batch.reserve(static_cast<std::size_t>(chunk));
        for (long i = 0; i < chunk; ++i)
            batch.push_back({detail::sample_candidate(archive, opt, rng, e + i, invalid), e + i, model});
        const std::vector<EvalRecord> records = evaluate_batch(evaluator, batch, opt.workers);
        for (const EvalRecord& rec : records) {
            archive.insert(rec.genome, rec.outcome.fitness, rec.eval_index);
            log.add(rec);
        }
        e += chunk;
    }
    return invalid;
}

struct MapElitesOutcome {
    EliteArchive archive;
    long invalid_candidates = 0;
};

inline MapElitesOutcome map_elites(const EvaluatorBase& evaluator, EvalLog& log, const MapElitesOptions& opt,
                                   std::uint64_t master_seed, int run_index = 0) {
    if (opt.budget < opt.batch_size) throw std::invalid_argument("map_elites: budget below batch size");
    MapElitesOutcome out{EliteArchive(opt.limits.min_templates, opt.limits.max_templates), 0};
    out.invalid_candidates =
        map_elites_span(evaluator, log, out.archive, opt, master_seed, run_index, 0, opt.budget, opt.model);
    return out;
}

}  // namespace crnswarm
