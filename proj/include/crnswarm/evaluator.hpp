#pragma once
// Evaluation plumbing shared by every optimizer: per-evaluation seed
// derivation, the append-only JSONL evaluation log, and a worker pool that
// evaluates batches with results independent of scheduling.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "crnswarm/fitness.hpp"
#include "crnswarm/genome.hpp"
#include "crnswarm/rng.hpp"
#include "json.hpp"

namespace crnswarm {

enum class ModelKind { full, surrogate };

inline const char* to_string(ModelKind m) { return m == ModelKind::full ? "full" : "surrogate"; }

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "full") return ModelKind::full;
    if (s == "surrogate") return ModelKind::surrogate;
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

struct EvalRecord {
    long eval_index = -1;
    ModelKind model = ModelKind::full;
    CrnGenome genome;
    FitnessOutcome outcome;
    std::vector<std::uint64_t> seeds;  // retrial seeds (empty for surrogate)
    double wall_time_s = 0.0;          // excluded from the canonical log line

    bool ok() const { return outcome.ok(); }
    double fitness() const { return outcome.fitness; }
};

/// Canonical log line. Key order is alphabetical (nlohmann object maps) and
/// doubles round-trip exactly, so identical records dump to identical bytes.
/// Failed evaluations store fitness as null (the -inf sentinel).
inline nlohmann::json record_to_json(const EvalRecord& rec) {
    nlohmann::json j;
    j["eval"] = rec.eval_index;
    j["model"] = to_string(rec.model);
    if (rec.ok())
        j["fitness"] = rec.outcome.fitness;
    else
        j["fitness"] = nullptr;
    j["retrials"] = rec.outcome.retrial_scores;
    j["failure"] = rec.outcome.failure;
    j["seeds"] = rec.seeds;
    j["genome"] = genome_to_json(rec.genome);
    return j;
}

inline EvalRecord record_from_json(const nlohmann::json& j) {
    EvalRecord rec;
    rec.eval_index = j.at("eval").get<long>();
    rec.model = model_kind_from_string(j.at("model").get<std::string>());
    rec.genome = genome_from_json(j.at("genome"));
    rec.outcome.failure = j.at("failure").get<std::string>();
    rec.outcome.retrial_scores = j.at("retrials").get<std::vector<double>>();
    if (j.at("fitness").is_null())
        rec.outcome.fitness = -std::numeric_limits<double>::infinity();
    else
        rec.outcome.fitness = j.at("fitness").get<double>();
    rec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    return rec;
}

/// Append-only evaluation log. Keeps all records in memory and, when given a
/// path, mirrors each one as a JSONL line. Wall times go to a sibling
/// timings.csv so the canonical file stays byte-reproducible.
class EvalLog {
public:
    EvalLog() = default;

    explicit EvalLog(const std::string& path, bool append = false) { open(path, append); }

    void open(const std::string& path, bool append = false) {
        const auto mode = append ? std::ios::app : std::ios::trunc;
        out_.open(path, std::ios::out | mode);
        if (!out_) throw std::runtime_error("cannot open log file '" + path + "'");
        timings_.open(path + ".timings.csv", std::ios::out | mode);
        if (timings_ && !append) timings_ << "eval,model,wall_time_s\n";
    }

    void add(const EvalRecord& rec) {
        records_.push_back(rec);
        if (out_.is_open()) {
            out_ << record_to_json(rec).dump() << '\n';
            out_.flush();
        }
        if (timings_.is_open()) {
            timings_ << rec.eval_index << ',' << to_string(rec.model) << ',' << rec.wall_time_s << '\n';
            timings_.flush();
        }
    }

    const std::vector<EvalRecord>& records() const { return records_; }
    long count() const { return static_cast<long>(records_.size()); }

    static std::vector<EvalRecord> load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read log file '" + path + "'");
        std::vector<EvalRecord> records;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            records.push_back(record_from_json(nlohmann::json::parse(line)));
        }
        return records;
    }

    /// Reads records up to the first malformed line (a crash can truncate the
    /// final write); missing files yield an empty list.
    static std::vector<EvalRecord> load_lenient(const std::string& path) {
        std::ifstream in(path);
        std::vector<EvalRecord> records;
        if (!in) return records;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                records.push_back(record_from_json(nlohmann::json::parse(line)));
            } catch (const std::exception&) {
                break;
            }
        }
        return records;
    }

private:
    std::vector<EvalRecord> records_;
    std::ofstream out_;
    std::ofstream timings_;
};

/// Anything that can score a genome. Implementations must be deterministic
/// functions of (genome, eval_index, model) and safe to call from multiple
/// threads at once.
class EvaluatorBase {
public:
    virtual ~EvaluatorBase() = default;
    virtual EvalRecord evaluate(const CrnGenome& genome, long eval_index, ModelKind model) const = 0;
};

/// Simulation-backed evaluator. Retrial seeds for evaluation e, retrial t of
/// run r are derive_seed(master, {evaluation-stream, r, e, t}); the surrogate
/// is deterministic and uses none.
class SimEvaluator final : public EvaluatorBase {
public:
    FullSimConfig sim;
    TargetShape target;
    FitnessParams fitness;
    PresenceMode presence = PresenceMode::bead_centers;
    std::uint64_t master_seed = 0;
    int run_index = 0;

    std::vector<std::uint64_t> retrial_seeds(long eval_index) const {
        std::vector<std::uint64_t> seeds;
        seeds.reserve(static_cast<std::size_t>(fitness.n_retrials));
        for (int t = 0; t < fitness.n_retrials; ++t)
            seeds.push_back(derive_seed(master_seed,
                                        {seed_stream::evaluation, static_cast<std::uint64_t>(run_index),
                                         static_cast<std::uint64_t>(eval_index), static_cast<std::uint64_t>(t)}));
        return seeds;
    }

    EvalRecord evaluate(const CrnGenome& genome, long eval_index, ModelKind model) const override {
        EvalRecord rec;
        rec.eval_index = eval_index;
        rec.model = model;
        rec.genome = genome;
        const auto start = std::chrono::steady_clock::now();
        if (model == ModelKind::full) {
            rec.seeds = retrial_seeds(eval_index);
            rec.outcome = evaluate_full(genome, target, fitness, sim, rec.seeds, presence);
        } else {
            rec.outcome = evaluate_surrogate(genome, target, fitness, sim);
        }
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return rec;
    }
};

/// Test evaluator scoring genomes with an arbitrary function.
class StubEvaluator final : public EvaluatorBase {
public:
    std::function<double(const CrnGenome&, long)> score;

    explicit StubEvaluator(std::function<double(const CrnGenome&, long)> fn) : score(std::move(fn)) {}

    EvalRecord evaluate(const CrnGenome& genome, long eval_index, ModelKind model) const override {
        EvalRecord rec;
        rec.eval_index = eval_index;
        rec.model = model;
        rec.genome = genome;
        rec.outcome.fitness = score(genome, eval_index);
        rec.outcome.retrial_scores = {rec.outcome.fitness};
        return rec;
    }
};

/// Resume support: serves recorded results for eval indices covered by a
/// prior log and delegates to the inner evaluator beyond it. Optimizer
/// drivers are deterministic, so re-driving them from scratch regenerates
/// the same candidates; this skips only the expensive simulation part.
/// A mismatch between the regenerated request and the recorded one means
/// the configuration changed and the log cannot be resumed.
class ResumingEvaluator final : public EvaluatorBase {
public:
    ResumingEvaluator(const EvaluatorBase& inner, std::vector<EvalRecord> prior, long base_index = 0)
        : inner_(inner), prior_(std::move(prior)), base_(base_index) {
        for (std::size_t i = 0; i < prior_.size(); ++i)
            if (prior_[i].eval_index != base_ + static_cast<long>(i))
                throw std::runtime_error("resume: log is not a contiguous evaluation sequence from index " +
                                         std::to_string(base_));
    }

    long replay_count() const { return static_cast<long>(prior_.size()); }

    EvalRecord evaluate(const CrnGenome& genome, long eval_index, ModelKind model) const override {
        if (eval_index >= base_ && eval_index < base_ + static_cast<long>(prior_.size())) {
            const EvalRecord& rec = prior_[static_cast<std::size_t>(eval_index - base_)];
            if (rec.model != model || !(rec.genome == genome))
                throw std::runtime_error("resume: evaluation " + std::to_string(eval_index) +
                                         " does not match the prior log (configuration changed?)");
            return rec;
        }
        return inner_.evaluate(genome, eval_index, model);
    }

private:
    const EvaluatorBase& inner_;
    std::vector<EvalRecord> prior_;
    long base_ = 0;
};

struct EvalRequest {
    CrnGenome genome;
    long eval_index = 0;
    ModelKind model = ModelKind::full;
};

/// Evaluate a batch on `workers` threads. Each result depends only on its
/// request, so the output is identical for any worker count; record order
/// matches request order.
inline std::vector<EvalRecord> evaluate_batch(const EvaluatorBase& evaluator, const std::vector<EvalRequest>& batch,
                                              int workers) {
    std::vector<EvalRecord> out(batch.size());
    if (workers <= 1 || batch.size() <= 1) {
        for (std::size_t i = 0; i < batch.size(); ++i)
            out[i] = evaluator.evaluate(batch[i].genome, batch[i].eval_index, batch[i].model);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= batch.size()) return;
            try {
                out[i] = evaluator.evaluate(batch[i].genome, batch[i].eval_index, batch[i].model);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(workers, static_cast<int>(batch.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace crnswarm
