#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "crnswarm/experiment.hpp"

using namespace crnswarm;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& stem) {
    const fs::path p = fs::temp_directory_path() / ("crnswarm_exp_" + stem);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json tiny_config(const std::string& method, const std::string& model) {
    nlohmann::json j;
    j["preset"] = "desk";
    j["method"] = method;
    j["model"] = model;
    j["runs"] = 2;
    j["budget"] = 40;
    j["batch_size"] = 20;
    j["population"] = 20;
    j["master_seed"] = 21;
    j["sim"] = {{"cells", 20}, {"steps", 60}, {"beads", 16}};
    j["fitness"] = {{"n_retrials", 1}};
    return j;
}

}  // namespace

TEST_CASE("presets carry the two documented scales", "[experiment]") {
    const ScalePreset full = preset_by_name("full");
    CHECK(full.sim.geom.cells == 160);
    CHECK(full.sim.steps == 4000);
    CHECK(full.sim.beads.count == 500);
    CHECK(full.fitness.n_retrials == 5);
    CHECK(full.budget == 3000);
    CHECK(full.runs == 16);

    const ScalePreset desk = preset_by_name("desk");
    CHECK(desk.sim.geom.cells == 64);
    CHECK(desk.sim.steps == 1500);
    CHECK(desk.sim.beads.count == 150);
    CHECK(desk.budget == 600);
    CHECK(desk.runs == 8);

    CHECK_THROWS_AS(preset_by_name("huge"), std::invalid_argument);
}

TEST_CASE("config parsing resolves presets and applies overrides", "[experiment]") {
    ExperimentConfig cfg = parse_experiment_config(nlohmann::json{{"preset", "desk"}});
    CHECK(cfg.sim.geom.cells == 64);
    CHECK(cfg.budget == 600);
    CHECK(cfg.runs == 8);
    CHECK(cfg.method == Method::map_elites);
    CHECK(cfg.model == ModelChoice::full);
    CHECK(cfg.presence == PresenceMode::cluster_disks);

    cfg = parse_experiment_config(tiny_config("bioneat", "surrogate"));
    CHECK(cfg.method == Method::bioneat);
    CHECK(cfg.model == ModelChoice::surrogate);
    CHECK(cfg.sim.geom.cells == 20);
    CHECK(cfg.sim.steps == 60);
    CHECK(cfg.sim.beads.count == 16);
    CHECK(cfg.fitness.n_retrials == 1);
    CHECK(cfg.budget == 40);
    // untouched desk values survive the override pass
    CHECK(cfg.sim.dt == preset_by_name("desk").sim.dt);
}

TEST_CASE("config parsing rejects malformed input with field paths", "[experiment]") {
    auto expect_error = [](nlohmann::json j, const std::string& needle) {
        try {
            parse_experiment_config(j);
            FAIL("expected ConfigError for " + j.dump());
        } catch (const ConfigError& e) {
            INFO(e.what());
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    expect_error({{"bogus", 1}}, "'bogus'");
    expect_error({{"sim", {{"bogus", 1}}}}, "'sim.bogus'");
    expect_error({{"fitness", {{"retrials", 3}}}}, "'fitness.retrials'");
    expect_error({{"budget", "lots"}}, "'budget'");
    expect_error({{"preset", "huge"}}, "'preset'");
    expect_error({{"method", "sgd"}}, "'method'");
    expect_error({{"model", "half"}}, "'model'");
    expect_error({{"presence", "psychic"}}, "'presence'");
    expect_error({{"target", "L_shape"}}, "'target'");
    expect_error({{"sim", {{"cells", 1}}}}, "'sim.cells'");
    expect_error({{"sim", {{"dt", -0.1}}}}, "'sim.dt'");
    expect_error({{"fitness", {{"n_retrials", 0}}}}, "'fitness.n_retrials'");
    expect_error({{"runs", 0}}, "'runs'");
    expect_error({{"budget", 10}, {"batch_size", 50}}, "'budget'");
    expect_error({{"method", "bioneat"}, {"budget", 10}, {"population", 50}}, "'budget'");
    expect_error({{"method", "expert_eval"}}, "'expert_genome'");
    // transfer budgets must add up and cover the retained individuals
    expect_error({{"model", "transfer"}, {"transfer", {{"surrogate_evals", 100}, {"full_evals", 100}}}},
                 "'transfer'");
    expect_error({{"model", "transfer"},
                  {"budget", 100},
                  {"transfer", {{"surrogate_evals", 95}, {"full_evals", 5}}}},
                 "'transfer.full_evals'");
    expect_error({{"method", "bioneat"},
                  {"model", "transfer"},
                  {"budget", 100},
                  {"population", 50},
                  {"transfer", {{"surrogate_evals", 70}, {"full_evals", 30}}}},
                 "'transfer.full_evals'");
}

TEST_CASE("planned evaluation budget covers refinement and expert eval", "[experiment]") {
    ExperimentConfig cfg = parse_experiment_config(tiny_config("map_elites", "full"));
    CHECK(cfg.planned_evaluations() == 2 * 40);
    cfg.refine = true;
    cfg.refine_budget = 25;
    CHECK(cfg.planned_evaluations() == 2 * 65);
    cfg.method = Method::expert_eval;
    cfg.expert_reevals = 30;
    CHECK(cfg.planned_evaluations() == 2 * 30);
}

TEST_CASE("transfer defaults split the budget in half", "[experiment]") {
    nlohmann::json j = tiny_config("map_elites", "transfer");
    const ExperimentConfig cfg = parse_experiment_config(j);
    CHECK(cfg.transfer.surrogate_evals == 20);
    CHECK(cfg.transfer.full_evals == 20);
    CHECK(cfg.transfer.total() == cfg.budget);
}

TEST_CASE("experiment produces the documented directory layout", "[experiment]") {
    const std::string dir = temp_dir("layout");
    const ExperimentConfig cfg = parse_experiment_config(tiny_config("map_elites", "surrogate"));
    const ExperimentSummary summary = run_experiment(cfg, dir);

    REQUIRE(summary.runs.size() == 2);
    for (int run = 0; run < 2; ++run) {
        const std::string rd = dir + "/run_0" + std::to_string(run);
        CHECK(fs::exists(rd + "/log.jsonl"));
        CHECK(fs::exists(rd + "/log.jsonl.timings.csv"));
        CHECK(fs::exists(rd + "/archive.json"));
        CHECK(fs::exists(rd + "/best_genome.json"));
        CHECK(fs::exists(rd + "/summary.json"));
        CHECK(fs::exists(rd + "/snapshot/beads.ppm"));
        CHECK(summary.runs[static_cast<std::size_t>(run)].evaluations == 40);

        // best fitness in the summary equals the archive's best elite
        const EliteArchive archive = EliteArchive::load(rd + "/archive.json");
        REQUIRE(archive.best() != nullptr);
        CHECK(summary.runs[static_cast<std::size_t>(run)].best_fitness == archive.best()->fitness);

        // the exported best genome round-trips to the archive's best elite
        const CrnGenome best = deserialize_genome(slurp(rd + "/best_genome.json"));
        CHECK(EliteArchive::key_of(best) == EliteArchive::key_of(archive.best()->genome));
    }
    CHECK(fs::exists(dir + "/summary.csv"));
    CHECK(fs::exists(dir + "/curves.csv"));

    // curves.csv has one aggregate row per evaluation index
    std::ifstream curves(dir + "/curves.csv");
    std::string line;
    int rows = 0;
    while (std::getline(curves, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 1 + 40);
}

TEST_CASE("rerunning a completed experiment is a no-op", "[experiment]") {
    const std::string dir = temp_dir("idempotent");
    const ExperimentConfig cfg = parse_experiment_config(tiny_config("map_elites", "surrogate"));
    run_experiment(cfg, dir);
    const std::string before = slurp(dir + "/run_00/summary.json");
    run_experiment(cfg, dir);  // wall_time_s would change if the run re-executed
    CHECK(slurp(dir + "/run_00/summary.json") == before);
}

TEST_CASE("same seed gives byte-identical logs and archives", "[experiment]") {
    const ExperimentConfig cfg = parse_experiment_config(tiny_config("map_elites", "surrogate"));
    const std::string a = temp_dir("bytes_a");
    const std::string b = temp_dir("bytes_b");
    run_experiment(cfg, a);
    run_experiment(cfg, b);
    CHECK(slurp(a + "/run_00/log.jsonl") == slurp(b + "/run_00/log.jsonl"));
    CHECK(slurp(a + "/run_00/archive.json") == slurp(b + "/run_00/archive.json"));
    CHECK(slurp(a + "/run_01/log.jsonl") == slurp(b + "/run_01/log.jsonl"));
}

TEST_CASE("interrupted runs resume to the same bytes", "[experiment]") {
    const ExperimentConfig cfg = parse_experiment_config(tiny_config("map_elites", "surrogate"));
    const std::string ref = temp_dir("resume_ref");
    run_experiment(cfg, ref);
    const std::string log_ref = slurp(ref + "/run_00/log.jsonl");

    const std::string dir = temp_dir("resume_cut");
    run_experiment(cfg, dir);
    // simulate a crash: keep a prefix of the log (cutting the last record in
    // half), drop the outputs written after it
    const std::string log = slurp(dir + "/run_00/log.jsonl");
    std::ofstream cut(dir + "/run_00/log.jsonl", std::ios::binary | std::ios::trunc);
    cut << log.substr(0, log.size() / 2);
    cut.close();
    fs::remove(dir + "/run_00/summary.json");
    fs::remove(dir + "/run_00/archive.json");

    run_experiment(cfg, dir);
    CHECK(slurp(dir + "/run_00/log.jsonl") == log_ref);
    CHECK(slurp(dir + "/run_00/archive.json") == slurp(ref + "/run_00/archive.json"));
}

TEST_CASE("bioneat experiments persist a loadable population", "[experiment]") {
    const std::string dir = temp_dir("bn");
    const ExperimentConfig cfg = parse_experiment_config(tiny_config("bioneat", "surrogate"));
    const ExperimentSummary summary = run_experiment(cfg, dir);

    REQUIRE(fs::exists(dir + "/run_00/population.json"));
    nlohmann::json j;
    std::ifstream in(dir + "/run_00/population.json");
    in >> j;
    const BioNeatState state = bioneat_state_from_json(j);
    REQUIRE(state.population.size() == 20);
    CHECK(state.population.front().fitness == summary.runs[0].best_fitness);
    CHECK(state.threshold > 0.0);
    CHECK_FALSE(state.best_history.empty());

    // round trip is exact
    CHECK(bioneat_state_to_json(state) == j);
}

TEST_CASE("refinement writes its own log after the main budget", "[experiment]") {
    const std::string dir = temp_dir("refine");
    nlohmann::json j = tiny_config("map_elites", "surrogate");
    j["runs"] = 1;
    j["refine"] = true;
    j["refine_budget"] = 18;
    const ExperimentConfig cfg = parse_experiment_config(j);
    const ExperimentSummary summary = run_experiment(cfg, dir);

    const std::vector<EvalRecord> refine = EvalLog::load(dir + "/run_00/refine_log.jsonl");
    REQUIRE(refine.size() == 18);
    CHECK(refine.front().eval_index == 40);
    CHECK(refine.back().eval_index == 57);
    for (const auto& rec : refine) CHECK(rec.model == ModelKind::surrogate);
    CHECK(summary.runs[0].evaluations == 40 + 18);
    CHECK(std::isfinite(summary.runs[0].refined_fitness));

    const CrnGenome refined = deserialize_genome(slurp(dir + "/run_00/refined_genome.json"));
    const CrnGenome best = deserialize_genome(slurp(dir + "/run_00/best_genome.json"));
    CHECK(count_features(refined).total == count_features(best).total);
}

TEST_CASE("reevaluation is seed-deterministic and reports sane statistics", "[experiment]") {
    nlohmann::json j = tiny_config("map_elites", "full");
    j["sim"]["steps"] = 250;
    j["sim"]["k_agg"] = 2.0;  // aggressive aggregation so scores vary at this tiny scale
    const ExperimentConfig cfg = parse_experiment_config(j);
    const CrnGenome genome = expert_like_genome();

    const ReevalReport a = reevaluate_genome(genome, cfg, 6, 77);
    const ReevalReport b = reevaluate_genome(genome, cfg, 6, 77);
    CHECK(a.scores == b.scores);
    REQUIRE(a.scores.size() == 6);

    const ReevalReport c = reevaluate_genome(genome, cfg, 6, 78);
    CHECK(a.scores != c.scores);  // different master seed, different sample

    const ReevalReport single = reevaluate_genome(genome, cfg, 1, 77);
    REQUIRE(single.scores.size() == 1);
    CHECK(single.scores[0] == a.scores[0]);

    std::vector<double> finite;
    for (double s : a.scores)
        if (std::isfinite(s)) finite.push_back(s);
    if (!finite.empty()) {
        CHECK(a.mean_v == Catch::Approx(mean(finite)));
        CHECK(a.median_v == Catch::Approx(median(finite)));
    }
    CHECK(a.failures == static_cast<int>(a.scores.size() - finite.size()));
}

TEST_CASE("variability study: full-size subsets deviate by zero", "[experiment]") {
    const ExperimentConfig cfg = parse_experiment_config(tiny_config("map_elites", "full"));
    const VariabilityReport report = variability_study(cfg, 3, 6, {2, 6}, 8, 91);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].subset_size == 2);
    CHECK(report.rows[1].subset_size == 6);
    // a subset of the whole oracle has the oracle median
    CHECK(report.rows[1].median_abs_dev == 0.0);
    CHECK(report.rows[1].mean_abs_dev == 0.0);
    CHECK(report.rows[0].median_abs_dev >= 0.0);

    const VariabilityReport again = variability_study(cfg, 3, 6, {2, 6}, 8, 91);
    CHECK(again.rows[0].median_abs_dev == report.rows[0].median_abs_dev);
    CHECK(again.rows[0].mean_abs_dev == report.rows[0].mean_abs_dev);

    CHECK_THROWS_AS(variability_study(cfg, 0, 6, {2}, 8, 91), std::invalid_argument);
    CHECK_THROWS_AS(variability_study(cfg, 3, 6, {7}, 8, 91), std::invalid_argument);
}

TEST_CASE("progress curves carry short runs forward", "[experiment]") {
    const std::string path = (fs::temp_directory_path() / "crnswarm_curves.csv").string();
    write_progress_curves({{0.1, 0.2, 0.3, 0.4}, {0.5, 0.6}}, path);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "eval,median,q25,q75,min,max");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, row)) {
        std::stringstream ss(row);
        std::vector<double> vals;
        std::string cell;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        rows.push_back(vals);
    }
    REQUIRE(rows.size() == 4);
    // row 3: curve 2 is carried forward at 0.6
    CHECK(rows[3][1] == Catch::Approx(0.5 * (0.4 + 0.6)));  // median
    CHECK(rows[3][4] == Catch::Approx(0.4));                // min
    CHECK(rows[3][5] == Catch::Approx(0.6));                // max
    fs::remove(path);
}

TEST_CASE("expert eval scores a provided genome file", "[experiment]") {
    const std::string dir = temp_dir("expert");
    Rng rng(11);
    IdSource ids;
    MutationConfig mcfg;
    const CrnGenome genome =
        topological_init(TopoInitConfig{}, mcfg, TopologyLimits::map_elites_defaults(), rng, ids);
    const std::string genome_path = dir + "/genome.json";
    {
        std::ofstream out(genome_path);
        out << serialize_genome(genome);
    }

    nlohmann::json j = tiny_config("expert_eval", "full");
    j["expert_genome"] = genome_path;
    j["expert_reevals"] = 5;
    j["runs"] = 1;
    const ExperimentConfig cfg = parse_experiment_config(j);
    const ExperimentSummary summary = run_experiment(cfg, dir);

    REQUIRE(summary.runs.size() == 1);
    CHECK(summary.runs[0].evaluations == 5);
    CHECK(fs::exists(dir + "/run_00/expert_report.json"));
    CHECK(fs::exists(dir + "/run_00/scores.csv"));

    nlohmann::json report;
    std::ifstream in(dir + "/run_00/expert_report.json");
    in >> report;
    CHECK(report.at("n").get<int>() == 5);
    CHECK(report.at("failures").get<int>() >= 0);
}

TEST_CASE("snapshot renders markers, masks and heat maps", "[snapshot]") {
    FullSimConfig sim;
    sim.geom = ArenaGeometry{1.0, 24};
    sim.steps = 60;
    sim.dt = 0.1;
    sim.beads.count = 25;
    const CrnGenome genome = expert_like_genome();
    const SimulationResult result = run_full(genome, sim, 5);
    const TargetShape target = make_target("T_shape", 24, 1.0);

    Image img;
    const int markers = render_beads(result, sim.geom, target, 3, img);
    CHECK(markers == 25);
    CHECK(img.width == 24 * 3);
    CHECK(img.height == 24 * 3);
    CHECK(img.channels == 3);

    const std::string dir = temp_dir("snap");
    const std::vector<std::string> files = emit_snapshot(result, sim.geom, target, 3, dir);
    CHECK(files.size() >= 2);
    for (const auto& f : files) CHECK(fs::exists(f));

    // beads.ppm is a valid binary P6 with the scaled dimensions
    std::ifstream ppm(dir + "/beads.ppm", std::ios::binary);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    ppm >> magic >> w >> h >> maxval;
    CHECK(magic == "P6");
    CHECK(w == 72);
    CHECK(h == 72);
    CHECK(maxval == 255);

    // beads.csv has a header plus one row per bead
    std::ifstream csv(dir + "/beads.csv");
    std::string line;
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 1 + 25);

    CHECK_THROWS_AS(render_beads(result, sim.geom, target, 0, img), std::invalid_argument);
}

TEST_CASE("empty simulation renders the target mask alone", "[snapshot]") {
    FullSimConfig sim;
    sim.geom = ArenaGeometry{1.0, 16};
    sim.steps = 10;
    sim.beads.count = 0;
    const SimulationResult result = run_full(expert_like_genome(), sim, 1);
    const TargetShape target = make_target("T_shape", 16, 1.0);
    Image img;
    CHECK(render_beads(result, sim.geom, target, 2, img) == 0);
    // image still contains the gray target mask over the white background
    bool has_gray = false;
    for (int y = 0; y < img.height && !has_gray; ++y)
        for (int x = 0; x < img.width && !has_gray; ++x)
            if (img.at(x, y)[0] == 205) has_gray = true;
    CHECK(has_gray);
}
