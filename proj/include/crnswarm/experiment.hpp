#pragma once
// Experiment harness: strict JSON configuration, the method x model run
// matrix with idempotent per-run resume, genome reevaluation, the retrial
// variability study, and cross-run summary tables.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crnswarm/cmaes.hpp"
#include "crnswarm/presets.hpp"
#include "crnswarm/snapshot.hpp"
#include "crnswarm/stats.hpp"
#include "crnswarm/transfer.hpp"

namespace crnswarm {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Strict object reader: typed access with field-path diagnostics, and a
/// final unknown-key sweep so typos fail loudly.
class ConfigReader {
public:
    ConfigReader(nlohmann::json j, std::string path) : j_(std::move(j)), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("field '" + path_ + "': expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    T get(const std::string& key, const T& fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        return typed<T>(key);
    }

    template <typename T>
    T require(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError("field '" + join(key) + "': required but missing");
        return typed<T>(key);
    }

    nlohmann::json object(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? j_.at(key) : nlohmann::json::object();
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ConfigError("field '" + join(key) + "': unknown field");
    }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    template <typename T>
    T typed(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("field '" + join(key) + "': wrong type (" + j_.at(key).dump() + ")");
        }
    }

    nlohmann::json j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

enum class Method { map_elites, bioneat, expert_eval };
enum class ModelChoice { full, surrogate, transfer };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::map_elites: return "map_elites";
        case Method::bioneat: return "bioneat";
        case Method::expert_eval: return "expert_eval";
    }
    return "?";
}

inline const char* to_string(ModelChoice m) {
    switch (m) {
        case ModelChoice::full: return "full";
        case ModelChoice::surrogate: return "surrogate";
        case ModelChoice::transfer: return "transfer";
    }
    return "?";
}

struct ExperimentConfig {
    std::string name = "experiment";
    std::string preset = "full";
    Method method = Method::map_elites;
    ModelChoice model = ModelChoice::full;
    int runs = 16;
    std::uint64_t master_seed = 1;
    int workers = 1;
    long budget = 3000;
    int batch_size = 50;
    int population = 50;
    TransferBudgets transfer;
    bool refine = false;
    long refine_budget = 2000;
    PresenceMode presence = PresenceMode::cluster_disks;
    std::string target_name = "T_shape";
    FullSimConfig sim;
    FitnessParams fitness;
    std::string expert_genome;  // expert_eval: path to the genome file
    int expert_reevals = 100;
    int snapshot_scale = 4;

    TargetShape make_target_shape() const { return make_target(target_name, sim.geom.cells, sim.geom.side_mm); }

    MapElitesOptions me_options() const {
        MapElitesOptions opt;
        opt.budget = budget;
        opt.batch_size = batch_size;
        opt.workers = workers;
        opt.model = model == ModelChoice::surrogate ? ModelKind::surrogate : ModelKind::full;
        return opt;
    }

    BioNeatOptions bn_options() const {
        BioNeatOptions opt;
        opt.budget = budget;
        opt.population = population;
        opt.workers = workers;
        opt.model = model == ModelChoice::surrogate ? ModelKind::surrogate : ModelKind::full;
        return opt;
    }

    SimEvaluator make_evaluator(int run_index) const {
        SimEvaluator ev;
        ev.sim = sim;
        ev.target = make_target_shape();
        ev.fitness = fitness;
        ev.presence = presence;
        ev.master_seed = master_seed;
        ev.run_index = run_index;
        return ev;
    }

    /// Evaluation budget the configuration will spend, for --dry-run.
    long planned_evaluations() const {
        if (method == Method::expert_eval) return static_cast<long>(runs) * expert_reevals;
        long per_run = budget;
        if (refine) per_run += refine_budget;
        return static_cast<long>(runs) * per_run;
    }
};

inline Method method_from_string(const std::string& s) {
    if (s == "map_elites") return Method::map_elites;
    if (s == "bioneat") return Method::bioneat;
    if (s == "expert_eval") return Method::expert_eval;
    throw ConfigError("field 'method': unknown value '" + s + "' (map_elites, bioneat, expert_eval)");
}

inline ModelChoice model_choice_from_string(const std::string& s) {
    if (s == "full") return ModelChoice::full;
    if (s == "surrogate") return ModelChoice::surrogate;
    if (s == "transfer") return ModelChoice::transfer;
    throw ConfigError("field 'model': unknown value '" + s + "' (full, surrogate, transfer)");
}

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    detail::ConfigReader top(j, "");
    ExperimentConfig cfg;

    cfg.preset = top.get<std::string>("preset", "full");
    ScalePreset preset;
    try {
        preset = preset_by_name(cfg.preset);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("field 'preset': ") + e.what());
    }
    cfg.sim = preset.sim;
    cfg.fitness = preset.fitness;
    cfg.budget = preset.budget;
    cfg.runs = preset.runs;

    cfg.name = top.get<std::string>("name", "experiment");
    cfg.method = method_from_string(top.get<std::string>("method", "map_elites"));
    cfg.model = model_choice_from_string(top.get<std::string>("model", "full"));
    cfg.runs = top.get<int>("runs", cfg.runs);
    cfg.master_seed = top.get<std::uint64_t>("master_seed", 1);
    cfg.workers = top.get<int>("workers", 1);
    cfg.budget = top.get<long>("budget", cfg.budget);
    cfg.batch_size = top.get<int>("batch_size", 50);
    cfg.population = top.get<int>("population", 50);
    cfg.refine = top.get<bool>("refine", false);
    cfg.refine_budget = top.get<long>("refine_budget", 2000);
    cfg.expert_genome = top.get<std::string>("expert_genome", "");
    cfg.expert_reevals = top.get<int>("expert_reevals", 100);
    cfg.snapshot_scale = top.get<int>("snapshot_scale", 4);
    cfg.target_name = top.get<std::string>("target", "T_shape");
    try {
        cfg.presence = presence_mode_from_string(top.get<std::string>("presence", "cluster_disks"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("field 'presence': ") + e.what());
    }

    {
        detail::ConfigReader tr(top.object("transfer"), "transfer");
        cfg.transfer.surrogate_evals = tr.get<long>("surrogate_evals", cfg.budget / 2);
        cfg.transfer.full_evals = tr.get<long>("full_evals", cfg.budget - cfg.budget / 2);
        tr.finish();
    }
    {
        detail::ConfigReader sim(top.object("sim"), "sim");
        const int cells = sim.get<int>("cells", cfg.sim.geom.cells);
        const double side = sim.get<double>("side_mm", cfg.sim.geom.side_mm);
        if (cells < 2) throw ConfigError("field 'sim.cells': must be >= 2");
        if (side <= 0.0) throw ConfigError("field 'sim.side_mm': must be > 0");
        cfg.sim.geom = ArenaGeometry{side, cells};
        cfg.sim.dt = sim.get<double>("dt", cfg.sim.dt);
        cfg.sim.steps = sim.get<int>("steps", cfg.sim.steps);
        cfg.sim.beads.count = sim.get<int>("beads", cfg.sim.beads.count);
        cfg.sim.beads.r_agg_um = sim.get<double>("r_agg_um", cfg.sim.beads.r_agg_um);
        cfg.sim.beads.r_motion_um = sim.get<double>("r_motion_um", cfg.sim.beads.r_motion_um);
        cfg.sim.physics.k_agg = sim.get<double>("k_agg", cfg.sim.physics.k_agg);
        cfg.sim.physics.k_deagg = sim.get<double>("k_deagg", cfg.sim.physics.k_deagg);
        cfg.sim.kinetics.k_pol = sim.get<double>("k_pol", cfg.sim.kinetics.k_pol);
        cfg.sim.kinetics.K_m = sim.get<double>("K_m", cfg.sim.kinetics.K_m);
        cfg.sim.kinetics.K_inh = sim.get<double>("K_inh", cfg.sim.kinetics.K_inh);
        cfg.sim.kinetics.source_rate = sim.get<double>("source_rate", cfg.sim.kinetics.source_rate);
        if (cfg.sim.dt <= 0.0) throw ConfigError("field 'sim.dt': must be > 0");
        if (cfg.sim.steps < 1) throw ConfigError("field 'sim.steps': must be >= 1");
        if (cfg.sim.beads.count < 0) throw ConfigError("field 'sim.beads': must be >= 0");
        sim.finish();
    }
    {
        detail::ConfigReader fit(top.object("fitness"), "fitness");
        cfg.fitness.r = fit.get<double>("r", cfg.fitness.r);
        cfg.fitness.p = fit.get<double>("p", cfg.fitness.p);
        cfg.fitness.a = fit.get<double>("a", cfg.fitness.a);
        cfg.fitness.n_retrials = fit.get<int>("n_retrials", cfg.fitness.n_retrials);
        cfg.fitness.presence_threshold = fit.get<double>("presence_threshold", cfg.fitness.presence_threshold);
        if (cfg.fitness.n_retrials < 1) throw ConfigError("field 'fitness.n_retrials': must be >= 1");
        fit.finish();
    }
    top.finish();

    if (cfg.runs < 1) throw ConfigError("field 'runs': must be >= 1");
    if (cfg.workers < 1) throw ConfigError("field 'workers': must be >= 1");
    if (cfg.method != Method::expert_eval) {
        if (cfg.budget < 1) throw ConfigError("field 'budget': must be >= 1");
        if (cfg.method == Method::map_elites && cfg.budget < cfg.batch_size)
            throw ConfigError("field 'budget': below batch_size");
        if (cfg.method == Method::bioneat && cfg.budget < cfg.population)
            throw ConfigError("field 'budget': below population");
    }
    if (cfg.model == ModelChoice::transfer) {
        if (cfg.transfer.total() != cfg.budget)
            throw ConfigError("field 'transfer': surrogate_evals + full_evals must equal budget");
        const long retained = cfg.method == Method::bioneat
                                  ? cfg.population
                                  : TopologyLimits::map_elites_defaults().max_templates -
                                        TopologyLimits::map_elites_defaults().min_templates + 1;
        if (cfg.transfer.full_evals < retained)
            throw ConfigError("field 'transfer.full_evals': cannot cover the retained individuals (" +
                              std::to_string(retained) + ")");
    }
    if (cfg.method == Method::expert_eval) {
        if (cfg.expert_genome.empty()) throw ConfigError("field 'expert_genome': required for expert_eval");
        if (cfg.expert_reevals < 1) throw ConfigError("field 'expert_reevals': must be >= 1");
    }
    try {
        cfg.make_target_shape();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("field 'target': ") + e.what());
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------
// BioNEAT state persistence (the BN analog of archive.json)

inline nlohmann::json bioneat_state_to_json(const BioNeatState& s) {
    auto num = [](double v) { return std::isinf(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    nlohmann::json j;
    j["threshold"] = s.threshold;
    j["population"] = nlohmann::json::array();
    for (const auto& ind : s.population) {
        nlohmann::json e;
        e["genome"] = genome_to_json(ind.genome);
        e["fitness"] = num(ind.fitness);
        e["eval"] = ind.eval_index;
        e["species"] = ind.species;
        j["population"].push_back(e);
    }
    j["representatives"] = nlohmann::json::array();
    for (const auto& rep : s.representatives) j["representatives"].push_back(genome_to_json(rep));
    j["best_history"] = nlohmann::json::array();
    for (double v : s.best_history) j["best_history"].push_back(num(v));
    j["species_history"] = s.species_history;
    return j;
}

inline BioNeatState bioneat_state_from_json(const nlohmann::json& j) {
    auto num = [](const nlohmann::json& v) {
        return v.is_null() ? -std::numeric_limits<double>::infinity() : v.get<double>();
    };
    BioNeatState s;
    s.threshold = j.at("threshold").get<double>();
    for (const auto& e : j.at("population"))
        s.population.push_back({genome_from_json(e.at("genome")), num(e.at("fitness")), e.at("eval").get<long>(),
                                e.at("species").get<int>()});
    for (const auto& rep : j.at("representatives")) s.representatives.push_back(genome_from_json(rep));
    for (const auto& v : j.at("best_history")) s.best_history.push_back(num(v));
    s.species_history = j.at("species_history").get<std::vector<int>>();
    return s;
}

// ---------------------------------------------------------------------------
// Per-run execution

struct RunSummary {
    int run = 0;
    double best_fitness = -std::numeric_limits<double>::infinity();
    long evaluations = 0;
    long invalid_candidates = 0;
    double wall_time_s = 0.0;  // this process; resumed runs count only the completing invocation
    double eval_time_s = 0.0;  // summed evaluation wall times (0 for replayed records)
    double refined_fitness = std::numeric_limits<double>::quiet_NaN();
};

inline nlohmann::json run_summary_to_json(const RunSummary& s) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["run"] = s.run;
    j["best_fitness"] = num(s.best_fitness);
    j["evaluations"] = s.evaluations;
    j["invalid_candidates"] = s.invalid_candidates;
    j["wall_time_s"] = s.wall_time_s;
    j["eval_time_s"] = s.eval_time_s;
    j["refined_fitness"] = num(s.refined_fitness);
    return j;
}

inline RunSummary run_summary_from_json(const nlohmann::json& j) {
    auto num = [](const nlohmann::json& v, double fallback) { return v.is_null() ? fallback : v.get<double>(); };
    RunSummary s;
    s.run = j.at("run").get<int>();
    s.best_fitness = num(j.at("best_fitness"), -std::numeric_limits<double>::infinity());
    s.evaluations = j.at("evaluations").get<long>();
    s.invalid_candidates = j.at("invalid_candidates").get<long>();
    s.wall_time_s = j.at("wall_time_s").get<double>();
    s.eval_time_s = j.at("eval_time_s").get<double>();
    s.refined_fitness = num(j.at("refined_fitness"), std::numeric_limits<double>::quiet_NaN());
    return s;
}

namespace detail {

inline std::string run_dir_name(int run) {
    std::ostringstream out;
    out << "run_" << std::setw(2) << std::setfill('0') << run;
    return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

}  // namespace detail

/// Executes one run of the configured optimizer inside `run_dir`, resuming
/// from an existing log when possible. Returns the run summary; a run whose
/// summary.json already exists is loaded, not re-executed.
inline RunSummary execute_run(const ExperimentConfig& cfg, int run, const std::string& run_dir,
                              const std::function<void(const std::string&)>& progress = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(run_dir);
    const std::string summary_path = run_dir + "/summary.json";
    if (fs::exists(summary_path)) {
        std::ifstream in(summary_path);
        nlohmann::json j;
        in >> j;
        return run_summary_from_json(j);
    }

    const auto start = std::chrono::steady_clock::now();
    const std::string log_path = run_dir + "/log.jsonl";
    const std::vector<EvalRecord> prior = EvalLog::load_lenient(log_path);
    if (!prior.empty() && progress)
        progress("run " + std::to_string(run) + ": resuming, " + std::to_string(prior.size()) +
                 " evaluations already logged");

    const SimEvaluator base = cfg.make_evaluator(run);
    std::vector<EvalRecord> main_prior;
    for (const auto& rec : prior)
        if (rec.eval_index < cfg.budget) main_prior.push_back(rec);
    const ResumingEvaluator evaluator(base, main_prior);
    EvalLog log(log_path);

    std::ofstream events(run_dir + "/events.log", std::ios::out | std::ios::trunc);
    auto event_sink = [&events](const std::string& msg) { events << msg << '\n'; };

    RunSummary summary;
    summary.run = run;
    CrnGenome best_genome;
    if (cfg.method == Method::map_elites) {
        MapElitesOptions opt = cfg.me_options();
        opt.event_sink = event_sink;
        if (cfg.model == ModelChoice::transfer) {
            const TransferMapElitesOutcome out =
                transfer_map_elites(evaluator, log, opt, cfg.transfer, cfg.master_seed, run);
            out.archive.save(run_dir + "/archive.json");
            summary.invalid_candidates = out.invalid_candidates;
            if (const Elite* best = out.archive.best()) {
                summary.best_fitness = best->fitness;
                best_genome = best->genome;
            }
        } else {
            const MapElitesOutcome out = map_elites(evaluator, log, opt, cfg.master_seed, run);
            out.archive.save(run_dir + "/archive.json");
            summary.invalid_candidates = out.invalid_candidates;
            if (const Elite* best = out.archive.best()) {
                summary.best_fitness = best->fitness;
                best_genome = best->genome;
            }
        }
    } else if (cfg.method == Method::bioneat) {
        BioNeatOptions opt = cfg.bn_options();
        opt.event_sink = event_sink;
        BioNeatState state;
        long invalid = 0;
        if (cfg.model == ModelChoice::transfer) {
            TransferBioNeatOutcome out = transfer_bioneat(evaluator, log, opt, cfg.transfer, cfg.master_seed, run);
            state = std::move(out.state);
            invalid = out.invalid_candidates;
        } else {
            BioNeatOutcome out = bioneat_baseline(evaluator, log, opt, cfg.master_seed, run);
            state = std::move(out.state);
            invalid = out.invalid_candidates;
        }
        detail::write_text(run_dir + "/population.json", bioneat_state_to_json(state).dump(2) + "\n");
        summary.invalid_candidates = invalid;
        if (!state.population.empty()) {
            summary.best_fitness = state.population.front().fitness;
            best_genome = state.population.front().genome;
        }
    } else {
        throw std::logic_error("execute_run: expert_eval is handled by run_expert_eval");
    }
    summary.evaluations = log.count();

    const bool have_best = !best_genome.species.empty();
    if (have_best) detail::write_text(run_dir + "/best_genome.json", serialize_genome(best_genome));

    if (cfg.refine && have_best) {
        const std::string refine_path = run_dir + "/refine_log.jsonl";
        std::vector<EvalRecord> refine_prior = EvalLog::load_lenient(refine_path);
        const ResumingEvaluator refine_eval(base, refine_prior, cfg.budget);
        EvalLog refine_log(refine_path);
        CmaesOptions ropt;
        ropt.budget = cfg.refine_budget;
        ropt.event_sink = event_sink;
        const ModelKind refine_model =
            cfg.model == ModelChoice::surrogate ? ModelKind::surrogate : ModelKind::full;
        const RefineResult refined =
            cmaes_refine(best_genome, refine_eval, &refine_log, ropt, cfg.master_seed, run, cfg.budget, refine_model);
        detail::write_text(run_dir + "/refined_genome.json", serialize_genome(refined.genome));
        summary.refined_fitness = refined.fitness;
        summary.evaluations += refined.evaluations;
        for (const auto& rec : refine_log.records()) summary.eval_time_s += rec.wall_time_s;
    }

    // final-state snapshot of the best genome (first retrial seed of a fresh
    // evaluation index one past the run's budget)
    if (have_best && cfg.sim.beads.count > 0) {
        const std::uint64_t seed =
            derive_seed(cfg.master_seed, {seed_stream::run, static_cast<std::uint64_t>(run)});
        try {
            const SimulationResult result = run_full(best_genome, cfg.sim, seed);
            const std::string snap_dir = run_dir + "/snapshot";
            fs::create_directories(snap_dir);
            emit_snapshot(result, cfg.sim.geom, base.target, cfg.snapshot_scale, snap_dir);
        } catch (const SimulationError& e) {
            event_sink(std::string("snapshot skipped: ") + e.what());
        }
    }

    for (const auto& rec : log.records()) summary.eval_time_s += rec.wall_time_s;
    summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail::write_text(summary_path, run_summary_to_json(summary).dump(2) + "\n");
    return summary;
}

/// Expert-eval run: load a genome, score it `expert_reevals` times with the
/// full model (single-run scores), report mean/sd/median plus the raw sample.
struct ReevalReport {
    std::vector<double> scores;  // raw sample, -inf for failed runs
    int failures = 0;
    double mean_v = 0.0;
    double sd = 0.0;
    double median_v = 0.0;
};

inline ReevalReport reevaluate_genome(const CrnGenome& genome, const ExperimentConfig& cfg, int n,
                                      std::uint64_t seed, int run_index = 0) {
    SimEvaluator ev = cfg.make_evaluator(run_index);
    ev.master_seed = seed;
    ev.fitness.n_retrials = 1;  // independent single-run scores
    std::vector<EvalRequest> requests;
    requests.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) requests.push_back({genome, i, ModelKind::full});
    const std::vector<EvalRecord> records = evaluate_batch(ev, requests, cfg.workers);

    ReevalReport report;
    std::vector<double> finite;
    for (const auto& rec : records) {
        report.scores.push_back(rec.outcome.fitness);
        if (rec.ok())
            finite.push_back(rec.outcome.fitness);
        else
            ++report.failures;
    }
    if (!finite.empty()) {
        report.mean_v = mean(finite);
        report.sd = finite.size() >= 2 ? std::sqrt(sample_variance(finite)) : 0.0;
        report.median_v = median(finite);
    }
    return report;
}

inline RunSummary run_expert_eval(const ExperimentConfig& cfg, int run, const std::string& run_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(run_dir);
    const std::string summary_path = run_dir + "/summary.json";
    if (fs::exists(summary_path)) {
        std::ifstream in(summary_path);
        nlohmann::json j;
        in >> j;
        return run_summary_from_json(j);
    }
    const auto start = std::chrono::steady_clock::now();

    std::ifstream in(cfg.expert_genome);
    if (!in) throw ConfigError("cannot open expert genome '" + cfg.expert_genome + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const CrnGenome genome = deserialize_genome(buf.str());

    const std::uint64_t seed = derive_seed(cfg.master_seed, {seed_stream::run, static_cast<std::uint64_t>(run)});
    const ReevalReport report = reevaluate_genome(genome, cfg, cfg.expert_reevals, seed, run);

    std::ofstream scores(run_dir + "/scores.csv");
    scores << "sample,score\n";
    for (std::size_t i = 0; i < report.scores.size(); ++i) scores << i << ',' << report.scores[i] << '\n';

    nlohmann::json j;
    j["mean"] = report.mean_v;
    j["sd"] = report.sd;
    j["median"] = report.median_v;
    j["failures"] = report.failures;
    j["n"] = cfg.expert_reevals;
    detail::write_text(run_dir + "/expert_report.json", j.dump(2) + "\n");

    RunSummary summary;
    summary.run = run;
    summary.best_fitness = report.median_v;
    summary.evaluations = cfg.expert_reevals;
    summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail::write_text(summary_path, run_summary_to_json(summary).dump(2) + "\n");
    return summary;
}

// ---------------------------------------------------------------------------
// Experiment driver + aggregation

struct ExperimentSummary {
    std::vector<RunSummary> runs;

    double median_best() const {
        std::vector<double> best;
        for (const auto& r : runs) best.push_back(r.best_fitness);
        return median(best);
    }
    double total_wall_time_s() const {
        double t = 0.0;
        for (const auto& r : runs) t += r.wall_time_s;
        return t;
    }
};

namespace detail {

/// Best-so-far fitness per evaluation index for one run log.
inline std::vector<double> best_so_far(const std::vector<EvalRecord>& records) {
    std::vector<double> out;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& rec : records) {
        best = std::max(best, rec.outcome.fitness);
        out.push_back(best);
    }
    return out;
}

}  // namespace detail

/// Per-evaluation-index aggregate over runs: median, quartiles, extremes of
/// the best-so-far curves (the quantities plotted in the paper's progress
/// figure). Curves shorter than the longest are carried forward at their
/// final value.
inline void write_progress_curves(const std::vector<std::vector<double>>& curves, const std::string& path) {
    std::size_t longest = 0;
    for (const auto& c : curves) longest = std::max(longest, c.size());
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "eval,median,q25,q75,min,max\n";
    for (std::size_t e = 0; e < longest; ++e) {
        std::vector<double> values;
        for (const auto& c : curves)
            if (!c.empty()) values.push_back(e < c.size() ? c[e] : c.back());
        if (values.empty()) break;
        out << e << ',' << median(values) << ',' << percentile(values, 25.0) << ',' << percentile(values, 75.0)
            << ',' << *std::min_element(values.begin(), values.end()) << ','
            << *std::max_element(values.begin(), values.end()) << '\n';
    }
}

inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                        const std::function<void(const std::string&)>& progress = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    ExperimentSummary summary;
    std::vector<std::vector<double>> curves;
    for (int run = 0; run < cfg.runs; ++run) {
        const std::string run_dir = out_dir + "/" + detail::run_dir_name(run);
        if (progress) progress("run " + std::to_string(run) + "/" + std::to_string(cfg.runs) + " -> " + run_dir);
        const RunSummary rs = cfg.method == Method::expert_eval ? run_expert_eval(cfg, run, run_dir)
                                                                : execute_run(cfg, run, run_dir, progress);
        summary.runs.push_back(rs);
        if (cfg.method != Method::expert_eval)
            curves.push_back(detail::best_so_far(EvalLog::load(run_dir + "/log.jsonl")));
    }

    std::ofstream table(out_dir + "/summary.csv", std::ios::out | std::ios::trunc);
    table << "run,best_fitness,evaluations,invalid_candidates,wall_time_s,eval_time_s,refined_fitness\n";
    for (const auto& r : summary.runs)
        table << r.run << ',' << r.best_fitness << ',' << r.evaluations << ',' << r.invalid_candidates << ','
              << r.wall_time_s << ',' << r.eval_time_s << ',' << r.refined_fitness << '\n';

    if (!curves.empty()) write_progress_curves(curves, out_dir + "/curves.csv");
    if (progress) {
        std::ostringstream msg;
        msg << "done: median best fitness " << summary.median_best() << " over " << cfg.runs << " runs, "
            << summary.total_wall_time_s() << " s total";
        progress(msg.str());
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Retrial variability study

struct VariabilityRow {
    int subset_size = 0;
    double median_abs_dev = 0.0;
    double mean_abs_dev = 0.0;
};

struct VariabilityReport {
    int n_genomes = 0;
    int oracle_size = 0;
    int subsets_per_size = 0;
    std::vector<VariabilityRow> rows;
};

/// Fig-4-style protocol at configurable scale: for each random genome build
/// an oracle of `oracle_size` single-run full-model scores, then compare the
/// medians of random subsets of each size against the oracle median.
inline VariabilityReport variability_study(const ExperimentConfig& cfg, int n_genomes, int oracle_size,
                                           const std::vector<int>& subset_sizes, int subsets_per_size,
                                           std::uint64_t seed,
                                           const std::function<void(const std::string&)>& progress = {}) {
    if (n_genomes < 1 || oracle_size < 2) throw std::invalid_argument("variability_study: degenerate scale");
    for (int s : subset_sizes)
        if (s < 1 || s > oracle_size) throw std::invalid_argument("variability_study: subset size outside oracle");

    // random valid topologies
    Rng genome_rng(derive_seed(seed, {seed_stream::study, 0}));
    MutationConfig mcfg;
    TopoInitConfig tcfg;
    std::vector<CrnGenome> genomes;
    for (int i = 0; i < n_genomes; ++i) {
        IdSource ids;
        genomes.push_back(topological_init(tcfg, mcfg, TopologyLimits::map_elites_defaults(), genome_rng, ids));
    }

    // one big batch: genome i, oracle sample k -> eval index i*oracle_size+k
    SimEvaluator ev = cfg.make_evaluator(0);
    ev.master_seed = derive_seed(seed, {seed_stream::study, 1});
    ev.fitness.n_retrials = 1;
    std::vector<EvalRequest> requests;
    for (int i = 0; i < n_genomes; ++i)
        for (int k = 0; k < oracle_size; ++k)
            requests.push_back({genomes[static_cast<std::size_t>(i)],
                                static_cast<long>(i) * oracle_size + k, ModelKind::full});
    if (progress) progress("variability: evaluating " + std::to_string(requests.size()) + " oracle scores");
    const std::vector<EvalRecord> records = evaluate_batch(ev, requests, cfg.workers);

    Rng subset_rng(derive_seed(seed, {seed_stream::study, 2}));
    VariabilityReport report;
    report.n_genomes = n_genomes;
    report.oracle_size = oracle_size;
    report.subsets_per_size = subsets_per_size;

    std::vector<std::vector<double>> oracles(static_cast<std::size_t>(n_genomes));
    for (int i = 0; i < n_genomes; ++i) {
        auto& oracle = oracles[static_cast<std::size_t>(i)];
        for (int k = 0; k < oracle_size; ++k)
            oracle.push_back(records[static_cast<std::size_t>(i) * oracle_size + k].outcome.fitness);
    }

    for (int size : subset_sizes) {
        std::vector<double> deviations;
        for (int i = 0; i < n_genomes; ++i) {
            const auto& oracle = oracles[static_cast<std::size_t>(i)];
            const double oracle_median = median(oracle);
            for (int rep = 0; rep < subsets_per_size; ++rep) {
                // partial Fisher-Yates draw without replacement
                std::vector<int> idx(oracle.size());
                std::iota(idx.begin(), idx.end(), 0);
                std::vector<double> subset;
                for (int k = 0; k < size; ++k) {
                    const std::size_t pick =
                        static_cast<std::size_t>(k) + subset_rng.below(idx.size() - static_cast<std::size_t>(k));
                    std::swap(idx[static_cast<std::size_t>(k)], idx[pick]);
                    subset.push_back(oracle[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])]);
                }
                deviations.push_back(std::abs(median(subset) - oracle_median));
            }
        }
        report.rows.push_back({size, median(deviations), mean(deviations)});
    }
    return report;
}

inline void write_variability_csv(const VariabilityReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "subset_size,median_abs_dev,mean_abs_dev\n";
    for (const auto& row : report.rows)
        out << row.subset_size << ',' << row.median_abs_dev << ',' << row.mean_abs_dev << '\n';
}

}  // namespace crnswarm
