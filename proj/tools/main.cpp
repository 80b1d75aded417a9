// Command-line front end: run experiments, reevaluate genomes, run the
// retrial variability study, render snapshots, and export genomes/tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crnswarm/experiment.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_other = 1;
constexpr int exit_config = 2;
constexpr int exit_simulation = 3;

crnswarm::CrnGenome load_genome_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw crnswarm::ConfigError("cannot open genome file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return crnswarm::deserialize_genome(buf.str());
    } catch (const crnswarm::ParseError& e) {
        throw crnswarm::ConfigError("genome file '" + path + "': " + e.what());
    }
}

/// Shared --config/--preset resolution for the verbs that only need a
/// simulation setting, not a full experiment description.
crnswarm::ExperimentConfig setting_from(const std::string& config_path, const std::string& preset) {
    if (!config_path.empty()) return crnswarm::load_experiment_config(config_path);
    nlohmann::json j;
    j["preset"] = preset;
    return crnswarm::parse_experiment_config(j);
}

void progress_to_stderr(const std::string& msg) { std::cerr << msg << std::endl; }

int cmd_run(const std::string& config_path, const std::string& out_dir, long seed, int workers, int runs,
            long budget, bool dry_run) {
    crnswarm::ExperimentConfig cfg = crnswarm::load_experiment_config(config_path);
    if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
    if (workers > 0) cfg.workers = workers;
    if (runs > 0) cfg.runs = runs;
    if (budget > 0) cfg.budget = budget;
    if (dry_run) {
        std::cout << "config ok: " << cfg.name << " (" << crnswarm::to_string(cfg.method) << ", "
                  << crnswarm::to_string(cfg.model) << ", " << cfg.runs << " runs)\n"
                  << "planned evaluations: " << cfg.planned_evaluations() << "\n";
        return exit_ok;
    }
    const crnswarm::ExperimentSummary summary = crnswarm::run_experiment(cfg, out_dir, progress_to_stderr);
    std::cout << "median best fitness: " << summary.median_best() << "\n"
              << "summary: " << out_dir << "/summary.csv\n";
    return exit_ok;
}

int cmd_reevaluate(const std::string& genome_path, const std::string& config_path, const std::string& preset,
                   int n, long seed, int workers, const std::string& out_csv) {
    crnswarm::ExperimentConfig cfg = setting_from(config_path, preset);
    if (workers > 0) cfg.workers = workers;
    const crnswarm::CrnGenome genome = load_genome_file(genome_path);
    const crnswarm::ReevalReport report =
        crnswarm::reevaluate_genome(genome, cfg, n, static_cast<std::uint64_t>(seed));
    std::cout << "n: " << n << "\nmean: " << report.mean_v << "\nsd: " << report.sd
              << "\nmedian: " << report.median_v << "\nfailures: " << report.failures << "\n";
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw std::runtime_error("cannot write '" + out_csv + "'");
        out << "sample,score\n";
        for (std::size_t i = 0; i < report.scores.size(); ++i) out << i << ',' << report.scores[i] << '\n';
        std::cout << "scores: " << out_csv << "\n";
    }
    return exit_ok;
}

int cmd_variability(const std::string& config_path, const std::string& preset, int n_genomes, int oracle_size,
                    std::vector<int> sizes, int subsets, long seed, int workers, const std::string& out_csv) {
    crnswarm::ExperimentConfig cfg = setting_from(config_path, preset);
    if (workers > 0) cfg.workers = workers;
    if (sizes.empty())
        for (int s = 2; s < oracle_size; ++s) sizes.push_back(s);
    const crnswarm::VariabilityReport report = crnswarm::variability_study(
        cfg, n_genomes, oracle_size, sizes, subsets, static_cast<std::uint64_t>(seed), progress_to_stderr);
    std::cout << "subset_size,median_abs_dev,mean_abs_dev\n";
    for (const auto& row : report.rows)
        std::cout << row.subset_size << ',' << row.median_abs_dev << ',' << row.mean_abs_dev << '\n';
    if (!out_csv.empty()) {
        crnswarm::write_variability_csv(report, out_csv);
        std::cerr << "table: " << out_csv << std::endl;
    }
    return exit_ok;
}

int cmd_snapshot(const std::string& genome_path, const std::string& config_path, const std::string& preset,
                 long seed, int scale, const std::string& out_dir) {
    const crnswarm::ExperimentConfig cfg = setting_from(config_path, preset);
    const crnswarm::CrnGenome genome = load_genome_file(genome_path);
    const crnswarm::SimulationResult result =
        crnswarm::run_full(genome, cfg.sim, static_cast<std::uint64_t>(seed));
    std::filesystem::create_directories(out_dir);
    const std::vector<std::string> files =
        crnswarm::emit_snapshot(result, cfg.sim.geom, cfg.make_target_shape(), scale, out_dir);
    for (const auto& f : files) std::cout << f << "\n";
    return exit_ok;
}

int cmd_export(const std::string& archive_path, const std::string& population_path,
               const std::string& experiment_dir, const std::string& builtin_expert_path,
               const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (!builtin_expert_path.empty()) {
        std::ofstream out(builtin_expert_path);
        if (!out) throw crnswarm::ConfigError("cannot write '" + builtin_expert_path + "'");
        out << crnswarm::serialize_genome(crnswarm::expert_like_genome());
        std::cout << builtin_expert_path << "\n";
        return exit_ok;
    }
    if (!archive_path.empty()) {
        const crnswarm::EliteArchive archive = crnswarm::EliteArchive::load(archive_path);
        fs::create_directories(out_dir);
        for (int key : archive.filled_keys()) {
            const crnswarm::Elite* elite = archive.at(key);
            std::ostringstream name;
            name << out_dir << "/bin_" << std::setw(2) << std::setfill('0') << key << ".json";
            std::ofstream out(name.str());
            out << crnswarm::serialize_genome(elite->genome);
            std::cout << name.str() << " fitness " << elite->fitness << "\n";
        }
        return exit_ok;
    }
    if (!population_path.empty()) {
        std::ifstream in(population_path);
        if (!in) throw crnswarm::ConfigError("cannot open '" + population_path + "'");
        nlohmann::json j;
        in >> j;
        const crnswarm::BioNeatState state = crnswarm::bioneat_state_from_json(j);
        fs::create_directories(out_dir);
        for (std::size_t i = 0; i < state.population.size(); ++i) {
            std::ostringstream name;
            name << out_dir << "/individual_" << std::setw(3) << std::setfill('0') << i << ".json";
            std::ofstream out(name.str());
            out << crnswarm::serialize_genome(state.population[i].genome);
        }
        std::cout << "wrote " << state.population.size() << " genomes to " << out_dir << "\n";
        return exit_ok;
    }
    // rebuild aggregate tables from a finished (or partially finished) experiment directory
    std::vector<crnswarm::RunSummary> runs;
    std::vector<std::vector<double>> curves;
    for (int run = 0;; ++run) {
        const std::string run_dir = experiment_dir + "/" + crnswarm::detail::run_dir_name(run);
        if (!fs::exists(run_dir)) break;
        const std::string summary_path = run_dir + "/summary.json";
        if (fs::exists(summary_path)) {
            std::ifstream in(summary_path);
            nlohmann::json j;
            in >> j;
            runs.push_back(crnswarm::run_summary_from_json(j));
        }
        const std::vector<crnswarm::EvalRecord> records =
            crnswarm::EvalLog::load_lenient(run_dir + "/log.jsonl");
        if (!records.empty()) curves.push_back(crnswarm::detail::best_so_far(records));
    }
    if (runs.empty() && curves.empty())
        throw crnswarm::ConfigError("no run_XX directories under '" + experiment_dir + "'");
    if (!runs.empty()) {
        std::ofstream table(experiment_dir + "/summary.csv");
        table << "run,best_fitness,evaluations,invalid_candidates,wall_time_s,eval_time_s,refined_fitness\n";
        for (const auto& r : runs)
            table << r.run << ',' << r.best_fitness << ',' << r.evaluations << ',' << r.invalid_candidates
                  << ',' << r.wall_time_s << ',' << r.eval_time_s << ',' << r.refined_fitness << '\n';
        std::cout << experiment_dir << "/summary.csv (" << runs.size() << " runs)\n";
    }
    if (!curves.empty()) {
        crnswarm::write_progress_curves(curves, experiment_dir + "/curves.csv");
        std::cout << experiment_dir << "/curves.csv (" << curves.size() << " logs)\n";
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crnswarm: CRN controller evolution for bead swarm self-assembly"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", genome_path, preset = "full", out_csv;
    std::string archive_path, population_path, experiment_dir, builtin_expert_path;
    long seed = -1;
    int workers = 0, runs = 0;
    long budget = 0;
    bool dry_run = false;
    int n = 100, n_genomes = 50, oracle_size = 50, subsets = 1000, scale = 4;
    std::vector<int> sizes;

    CLI::App* run = app.add_subcommand("run", "execute an experiment configuration");
    run->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
    run->add_option("-o,--out", out_dir, "output directory (default: out)");
    run->add_option("-s,--seed", seed, "override master seed");
    run->add_option("-w,--workers", workers, "override worker count");
    run->add_option("--runs", runs, "override number of runs");
    run->add_option("--budget", budget, "override evaluation budget");
    run->add_flag("--dry-run", dry_run, "validate config and print planned evaluations");

    CLI::App* reev = app.add_subcommand("reevaluate", "score a genome n times with the full model");
    reev->add_option("-g,--genome", genome_path, "genome file")->required();
    reev->add_option("-c,--config", config_path, "experiment config for the simulation setting");
    reev->add_option("-p,--preset", preset, "scale preset when no config given (full|desk)");
    reev->add_option("-n", n, "number of independent scores (default 100)");
    reev->add_option("-s,--seed", seed, "master seed (default 1)");
    reev->add_option("-w,--workers", workers, "worker count");
    reev->add_option("-o,--out", out_csv, "also write the raw sample as CSV");

    CLI::App* vara = app.add_subcommand("variability", "retrial-count variability study");
    vara->add_option("-c,--config", config_path, "experiment config for the simulation setting");
    vara->add_option("-p,--preset", preset, "scale preset when no config given (full|desk)");
    vara->add_option("--genomes", n_genomes, "number of random genomes (default 50)");
    vara->add_option("--oracle", oracle_size, "oracle sample size per genome (default 50)");
    vara->add_option("--sizes", sizes, "subset sizes (default 2..oracle-1)");
    vara->add_option("--subsets", subsets, "subsets per size per genome (default 1000)");
    vara->add_option("-s,--seed", seed, "master seed (default 1)");
    vara->add_option("-w,--workers", workers, "worker count");
    vara->add_option("-o,--out", out_csv, "also write the table as CSV");

    CLI::App* snap = app.add_subcommand("snapshot", "simulate a genome once and render the final state");
    snap->add_option("-g,--genome", genome_path, "genome file")->required();
    snap->add_option("-c,--config", config_path, "experiment config for the simulation setting");
    snap->add_option("-p,--preset", preset, "scale preset when no config given (full|desk)");
    snap->add_option("-s,--seed", seed, "simulation seed (default 1)");
    snap->add_option("--scale", scale, "pixels per grid cell (default 4)");
    snap->add_option("-o,--out", out_dir, "output directory")->required();

    CLI::App* expo = app.add_subcommand("export", "export genomes from archives or rebuild summary tables");
    expo->add_option("--archive", archive_path, "elite archive to export genomes from");
    expo->add_option("--population", population_path, "population file to export genomes from");
    expo->add_option("--experiment", experiment_dir, "experiment directory to rebuild summary.csv/curves.csv");
    expo->add_option("--builtin-expert", builtin_expert_path,
                     "write the built-in expert-like controller genome to this file");
    expo->add_option("-o,--out", out_dir, "output directory for genome files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seed, workers, runs, budget, dry_run);
        if (reev->parsed())
            return cmd_reevaluate(genome_path, config_path, preset, n, seed < 0 ? 1 : seed, workers, out_csv);
        if (vara->parsed())
            return cmd_variability(config_path, preset, n_genomes, oracle_size, sizes, subsets,
                                   seed < 0 ? 1 : seed, workers, out_csv);
        if (snap->parsed())
            return cmd_snapshot(genome_path, config_path, preset, seed < 0 ? 1 : seed, scale, out_dir);
        if (expo->parsed()) {
            if (archive_path.empty() && population_path.empty() && experiment_dir.empty() &&
                builtin_expert_path.empty())
                throw crnswarm::ConfigError(
                    "export: give one of --archive, --population, --experiment, --builtin-expert");
            return cmd_export(archive_path, population_path, experiment_dir, builtin_expert_path, out_dir);
        }
    } catch (const crnswarm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return exit_config;
    } catch (const crnswarm::SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << std::endl;
        return exit_simulation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return exit_other;
    }
    return exit_other;
}
