#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include <crnswarm/fitness.hpp>
#include <crnswarm/rng.hpp>

using namespace crnswarm;
using Catch::Approx;

namespace {

std::vector<double> brute_force_distance(const std::vector<std::uint8_t>& mask, int nx, int ny) {
    std::vector<double> out(static_cast<std::size_t>(nx) * ny, 0.0);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (int ty = 0; ty < ny; ++ty)
                for (int tx = 0; tx < nx; ++tx) {
                    if (!mask[static_cast<std::size_t>(ty) * nx + tx]) continue;
                    const double d2 = static_cast<double>(x - tx) * (x - tx) + static_cast<double>(y - ty) * (y - ty);
                    best = std::min(best, d2);
                }
            out[static_cast<std::size_t>(y) * nx + x] = std::sqrt(best);
        }
    return out;
}

CrnGenome feed_genome() {
    CrnGenome g;
    g.species.push_back({0, SpeciesKind::gradient_input, 0.005, 5e-4});
    g.species.push_back({1, SpeciesKind::gradient_input, 0.005, 5e-4});
    g.species.push_back({2, SpeciesKind::anchoring, 0.1, 5e-4});
    g.templates.push_back({0, 0, 2, 100.0, std::nullopt, true});
    return g;
}

}  // namespace

TEST_CASE("distance transform matches brute force bit for bit") {
    Rng rng(31337);
    for (const auto [nx, ny] : {std::pair{16, 16}, std::pair{33, 17}, std::pair{7, 40}}) {
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx) * ny, 0);
        for (auto& m : mask) m = rng.uniform01() < 0.08 ? 1 : 0;
        mask[0] = 1;  // never empty
        const auto t = finalize_target("custom", nx, ny, mask);
        const auto oracle = brute_force_distance(mask, nx, ny);
        for (std::size_t i = 0; i < oracle.size(); ++i) REQUIRE(t.distance[i] == oracle[i]);
    }
}

TEST_CASE("distance is zero exactly on the target") {
    const auto t = make_target("T_shape", 64);
    for (std::size_t i = 0; i < t.mask.size(); ++i) {
        if (t.mask[i])
            REQUIRE(t.distance[i] == 0.0);
        else
            REQUIRE(t.distance[i] > 0.0);
    }
}

TEST_CASE("the T target has 0.20mm bars in the right places") {
    const auto t = make_target("T_shape", 160);
    // Top bar: rows 0..31 full width; stem: columns 64..95 below it.
    REQUIRE(t.target_cells == 160 * 32 + 32 * 128);
    REQUIRE(t.in_target(0, 0));
    REQUIRE(t.in_target(159, 31));
    REQUIRE_FALSE(t.in_target(0, 32));
    REQUIRE(t.in_target(64, 32));
    REQUIRE(t.in_target(95, 159));
    REQUIRE_FALSE(t.in_target(63, 159));
    REQUIRE_FALSE(t.in_target(96, 159));

    REQUIRE(make_target("h_line", 160).target_cells == 160 * 32);
    REQUIRE(make_target("v_line", 160).target_cells == 32 * 160);
    REQUIRE_THROWS_AS(make_target("circle", 160), std::invalid_argument);
}

TEST_CASE("empty targets are rejected") {
    REQUIRE_THROWS_AS(finalize_target("custom", 4, 4, std::vector<std::uint8_t>(16, 0)), std::invalid_argument);
}

TEST_CASE("match-nomatch worked example") {
    // 4x4 grid, target = column x=2, presence at (2,1) and (0,0).
    std::vector<std::uint8_t> mask(16, 0);
    for (int y = 0; y < 4; ++y) mask[static_cast<std::size_t>(y) * 4 + 2] = 1;
    const auto target = finalize_target("custom", 4, 4, mask);

    std::vector<std::uint8_t> presence(16, 0);
    presence[1 * 4 + 2] = 1;  // inside the target
    presence[0 * 4 + 0] = 1;  // distance 2 outside
    const FitnessParams params;
    const double score = match_nomatch(presence, target, params);
    const double expected = (1.0 - 0.2 * std::exp(0.1 * 2.0)) / 4.0;
    REQUIRE(score == Approx(expected).epsilon(1e-12));
    REQUIRE(score == Approx(0.188930).margin(1e-6));
}

TEST_CASE("empty presence scores zero and a perfect fill scores one") {
    const auto target = make_target("T_shape", 64);
    const std::vector<std::uint8_t> empty(target.mask.size(), 0);
    REQUIRE(match_nomatch(empty, target, {}) == 0.0);
    REQUIRE(match_nomatch(target.mask, target, {}) == Approx(1.0));
}

TEST_CASE("dimension mismatch is an error") {
    const auto target = make_target("T_shape", 64);
    REQUIRE_THROWS_AS(match_nomatch(std::vector<std::uint8_t>(100, 0), target, {}), std::invalid_argument);
}

TEST_CASE("score is monotone in presence changes") {
    const auto target = make_target("T_shape", 32);
    const FitnessParams params;
    std::vector<std::uint8_t> presence(target.mask.size(), 0);
    presence[5] = 1;  // top bar cell
    const double base = match_nomatch(presence, target, params);

    auto with = presence;
    with[6] = 1;  // another target cell
    REQUIRE(match_nomatch(with, target, params) > base);

    auto outside = presence;
    outside[static_cast<std::size_t>(31) * 32 + 0] = 1;  // bottom-left corner
    REQUIRE(match_nomatch(outside, target, params) < base);
}

TEST_CASE("penalty grows strictly with distance") {
    std::vector<std::uint8_t> mask(64 * 64, 0);
    mask[0] = 1;  // single target cell at the origin
    const auto target = finalize_target("custom", 64, 64, mask);
    const FitnessParams params;
    double prev = 1.0;
    for (int x = 1; x < 60; x += 7) {
        std::vector<std::uint8_t> presence(mask.size(), 0);
        presence[static_cast<std::size_t>(x)] = 1;
        const double s = match_nomatch(presence, target, params);
        REQUIRE(s < prev);
        prev = s;
    }
}

TEST_CASE("presence from bead centers maps coordinates to cells") {
    ArenaGeometry geom{1.0, 160};
    SimulationResult res;
    res.beads.push_back({0.5, 0.5});
    const auto presence = presence_from_full(res, geom);
    int count = 0;
    for (std::size_t i = 0; i < presence.size(); ++i)
        if (presence[i]) {
            ++count;
            REQUIRE(i == static_cast<std::size_t>(80) * 160 + 80);
        }
    REQUIRE(count == 1);

    const auto none = presence_from_full(SimulationResult{}, geom);
    for (auto b : none) REQUIRE(b == 0);
}

TEST_CASE("many beads cover between one and bead-count cells") {
    ArenaGeometry geom{1.0, 160};
    SimulationResult res;
    Rng rng(5);
    for (int i = 0; i < 500; ++i) res.beads.push_back({rng.uniform01(), rng.uniform01()});
    const auto presence = presence_from_full(res, geom);
    int count = 0;
    for (auto b : presence) count += b;
    REQUIRE(count >= 1);
    REQUIRE(count <= 500);
}

TEST_CASE("presence modes restrict and dilate correctly") {
    ArenaGeometry geom{1.0, 64};
    SimulationResult res;
    res.beads.push_back({0.25, 0.25});
    res.beads.push_back({0.30, 0.25});
    res.beads.push_back({0.75, 0.75});  // free bead
    res.clusters.push_back({0, 1});

    auto count = [](const std::vector<std::uint8_t>& p) {
        int c = 0;
        for (auto b : p) c += b;
        return c;
    };
    const int centers_all = count(presence_of(res, geom, PresenceMode::bead_centers, 50.0));
    const int centers_cl = count(presence_of(res, geom, PresenceMode::cluster_centers, 50.0));
    const int disks_all = count(presence_of(res, geom, PresenceMode::bead_disks, 50.0));
    const int disks_cl = count(presence_of(res, geom, PresenceMode::cluster_disks, 50.0));
    REQUIRE(centers_all == 3);
    REQUIRE(centers_cl == 2);
    REQUIRE(disks_all > centers_all);
    REQUIRE(disks_cl > centers_cl);
    REQUIRE(disks_cl < disks_all);
}

TEST_CASE("surrogate presence thresholds the anchor field") {
    const CrnGenome g = feed_genome();
    SimulationResult res;
    res.fields = GridState(ArenaGeometry{1.0, 16}, {0, 1, 2});

    auto p = presence_from_surrogate(res, g, 10.0);
    for (auto b : p) REQUIRE(b == 0);

    res.fields.field(2).fill(20.0);
    p = presence_from_surrogate(res, g, 10.0);
    for (auto b : p) REQUIRE(b == 1);
}

TEST_CASE("raising the threshold shrinks presence monotonically") {
    const CrnGenome g = feed_genome();
    SimulationResult res;
    res.fields = GridState(ArenaGeometry{1.0, 32}, {0, 1, 2});
    Rng rng(9);
    for (auto& v : res.fields.field(2).data) v = rng.uniform01() * 40.0;

    int last_count = 32 * 32 + 1;
    for (double theta = 2.0; theta <= 40.0; theta *= 1.5) {
        int count = 0;
        for (auto b : presence_from_surrogate(res, g, theta)) count += b;
        REQUIRE(count <= last_count);
        last_count = count;
    }
}

TEST_CASE("with presence confined to the target the score decays with the threshold") {
    // The score itself is only threshold-monotone when no penalized cells
    // exist: raising theta then only removes rewarded cells. (With outside
    // presence, a higher threshold can remove penalties and raise the
    // score, so no global monotonicity is claimed.)
    const CrnGenome g = feed_genome();
    const auto target = make_target("T_shape", 32);
    SimulationResult res;
    res.fields = GridState(ArenaGeometry{1.0, 32}, {0, 1, 2});
    Rng rng(10);
    auto& anchor = res.fields.field(2);
    for (std::size_t i = 0; i < anchor.data.size(); ++i)
        anchor.data[i] = target.mask[i] ? rng.uniform01() * 40.0 : 0.0;

    FitnessParams params;
    double prev = std::numeric_limits<double>::infinity();
    for (double theta = 2.0; theta <= 40.0; theta *= 1.5) {
        const double s = match_nomatch(presence_from_surrogate(res, g, theta), target, params);
        REQUIRE(s <= (prev == std::numeric_limits<double>::infinity() ? 1.0 : prev));
        prev = s;
    }
}

TEST_CASE("full evaluation takes the median over retrials") {
    FullSimConfig cfg;
    cfg.geom = ArenaGeometry{1.0, 32};
    cfg.steps = 20;
    cfg.beads.count = 10;
    const auto target = make_target("T_shape", 32);
    FitnessParams params;

    // Identical seeds: every retrial sees the same world, median == single.
    const std::vector<std::uint64_t> seeds(5, 42);
    const auto out = evaluate_full(feed_genome(), target, params, cfg, seeds);
    REQUIRE(out.ok());
    REQUIRE(out.retrial_scores.size() == 5);
    for (double s : out.retrial_scores) REQUIRE(s == out.retrial_scores[0]);
    REQUIRE(out.fitness == out.retrial_scores[0]);

    REQUIRE_THROWS_AS(evaluate_full(feed_genome(), target, params, cfg, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("failed simulations yield the failure sentinel") {
    FullSimConfig cfg;
    cfg.geom = ArenaGeometry{1.0, 16};
    cfg.steps = 30;
    cfg.beads.count = 5;
    cfg.kinetics.k_pol = 1e9;  // guaranteed blow-up
    CrnGenome g = feed_genome();
    g.templates.push_back({1, 2, 2, 200.0, std::nullopt, true});
    const auto target = make_target("T_shape", 16);
    const auto out = evaluate_full(g, target, {}, cfg, {1, 2, 3, 4, 5});
    REQUIRE_FALSE(out.ok());
    REQUIRE(std::isinf(out.fitness));
    REQUIRE(out.fitness < 0.0);
    REQUIRE_FALSE(out.failure.empty());
}

TEST_CASE("surrogate evaluation is deterministic and zero for dead genomes") {
    FullSimConfig cfg;
    cfg.geom = ArenaGeometry{1.0, 32};
    cfg.steps = 50;
    const auto target = make_target("T_shape", 32);
    const auto a = evaluate_surrogate(feed_genome(), target, {}, cfg);
    const auto b = evaluate_surrogate(feed_genome(), target, {}, cfg);
    REQUIRE(a.ok());
    REQUIRE(a.fitness == b.fitness);

    const auto dead = evaluate_surrogate(base_individual(), target, {}, cfg);
    REQUIRE(dead.fitness == 0.0);
}

TEST_CASE("PBM masks load in both ascii and binary form") {
    const char* ascii_path = "/tmp/crnswarm_test_mask.pbm";
    {
        std::ofstream f(ascii_path);
        f << "P1\n# comment\n4 3\n0 1 0 0\n0 1 1 0\n0 0 0 1\n";
    }
    const auto t = load_target_pbm(ascii_path);
    REQUIRE(t.nx == 4);
    REQUIRE(t.ny == 3);
    REQUIRE(t.target_cells == 4);
    REQUIRE(t.in_target(1, 0));
    REQUIRE(t.in_target(2, 1));
    REQUIRE(t.in_target(3, 2));

    const char* bin_path = "/tmp/crnswarm_test_mask_bin.pbm";
    {
        std::ofstream f(bin_path, std::ios::binary);
        f << "P4\n4 3\n";
        // Rows padded to one byte: 0100, 0110, 0001.
        f.put(static_cast<char>(0b01000000));
        f.put(static_cast<char>(0b01100000));
        f.put(static_cast<char>(0b00010000));
    }
    const auto tb = load_target_pbm(bin_path);
    REQUIRE(tb.mask == t.mask);
    std::remove(ascii_path);
    std::remove(bin_path);

    REQUIRE_THROWS(load_target_pbm("/tmp/definitely_missing_mask.pbm"));
}
