#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include <crnswarm/full_sim.hpp>
#include <crnswarm/rng.hpp>

using namespace crnswarm;
using Catch::Approx;

namespace {

CrnGenome feed_genome() {
    CrnGenome g;
    g.species.push_back({0, SpeciesKind::gradient_input, 0.005, 5e-4});
    g.species.push_back({1, SpeciesKind::gradient_input, 0.005, 5e-4});
    g.species.push_back({2, SpeciesKind::anchoring, 0.1, 5e-4});
    g.templates.push_back({0, 0, 2, 100.0, std::nullopt, true});
    return g;
}

}  // namespace

TEST_CASE("Stokes-Einstein coefficient matches the hand-derived value") {
    PhysicsParams phys;
    const double d_mm2_min = diffusion_coefficient(5.0, phys);
    // k_B*T/(6*pi*d*eta) with d=5um, T=316.15K, eta=6.5e-4 Pa*s,
    // evaluated by hand: 7.1251e-14 m^2/s = 4.27507e-6 mm^2/min.
    REQUIRE(d_mm2_min == Approx(4.27507e-6).epsilon(1e-4));
    const double d_mm2_s = d_mm2_min / 60.0;
    REQUIRE(d_mm2_s == Approx(7.1251e-8).epsilon(1e-4));
}

TEST_CASE("diffusion coefficient scales inversely with size") {
    PhysicsParams phys;
    REQUIRE(diffusion_coefficient(10.0, phys) == Approx(diffusion_coefficient(5.0, phys) / 2.0));
    // Cluster of 4 beads: size 4x larger, coefficient 4x smaller.
    REQUIRE(diffusion_coefficient(4.0 * 5.0, phys) == Approx(diffusion_coefficient(5.0, phys) / 4.0));
}

TEST_CASE("classical radius form doubles the literal-size coefficient") {
    PhysicsParams literal, classical;
    classical.classical_radius_form = true;
    REQUIRE(diffusion_coefficient(5.0, classical) == Approx(2.0 * diffusion_coefficient(5.0, literal)));
}

TEST_CASE("free-bead Brownian steps have the prescribed moments") {
    FullSimConfig cfg;
    cfg.geom = ArenaGeometry{100.0, 16};  // huge arena: walls never touched
    Rng rng(42);
    std::vector<BeadState> beads = {{50.0, 50.0}};
    const BondList no_bonds;

    const double d_coeff = diffusion_coefficient(cfg.beads.r_motion_um, cfg.physics);
    const double dt = 0.1;
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x0 = beads[0].x, y0 = beads[0].y;
        brownian_step(beads, no_bonds, cfg, dt, rng);
        const double dx = beads[0].x - x0, dy = beads[0].y - y0;
        sum += dx + dy;
        sum2 += dx * dx + dy * dy;
    }
    const double samples = 2.0 * n;  // two axes
    const double mean_step = sum / samples;
    const double var_step = sum2 / samples - mean_step * mean_step;
    const double expected_var = 2.0 * d_coeff * dt;
    REQUIRE(std::abs(mean_step) < 3.0 * std::sqrt(expected_var / samples));
    REQUIRE(std::abs(var_step - expected_var) / expected_var < 3.0 * std::sqrt(2.0 / samples));
}

TEST_CASE("dt zero leaves positions unchanged") {
    FullSimConfig cfg;
    Rng rng(1);
    std::vector<BeadState> beads = {{0.25, 0.75}, {0.5, 0.5}};
    brownian_step(beads, {}, cfg, 0.0, rng);
    REQUIRE(beads[0].x == 0.25);
    REQUIRE(beads[0].y == 0.75);
    REQUIRE(rng.draw_count() == 0);
}

TEST_CASE("reflection keeps positions inside the arena") {
    REQUIRE(detail::reflect_into(-0.3, 1.0) == Approx(0.3));
    REQUIRE(detail::reflect_into(1.2, 1.0) == Approx(0.8));
    REQUIRE(detail::reflect_into(2.6, 1.0) == Approx(0.6));
    REQUIRE(detail::reflect_into(0.4, 1.0) == 0.4);

    FullSimConfig cfg;
    cfg.geom = ArenaGeometry{0.02, 4};  // tiny arena, every step hits a wall
    Rng rng(3);
    std::vector<BeadState> beads = {{0.01, 0.01}};
    for (int i = 0; i < 5000; ++i) {
        brownian_step(beads, {}, cfg, 10.0, rng);
        REQUIRE(beads[0].x >= 0.0);
        REQUIRE(beads[0].x <= cfg.geom.side_mm);
        REQUIRE(beads[0].y >= 0.0);
        REQUIRE(beads[0].y <= cfg.geom.side_mm);
    }
}

TEST_CASE("clusters move rigidly with reduced diffusion") {
    FullSimConfig cfg;
    cfg.geom = ArenaGeometry{100.0, 16};
    Rng rng(7);
    std::vector<BeadState> beads = {{50.0, 50.0}, {50.05, 50.0}, {50.0, 50.05}};
    const BondList bonds = {{0, 1}, {1, 2}};
    const double rel01x = beads[1].x - beads[0].x;
    const double rel02y = beads[2].y - beads[0].y;
    for (int i = 0; i < 100; ++i) brownian_step(beads, bonds, cfg, 0.1, rng);
    REQUIRE(beads[1].x - beads[0].x == Approx(rel01x));
    REQUIRE(beads[2].y - beads[0].y == Approx(rel02y));
    // One rigid move consumes one Gaussian pair.
    REQUIRE(rng.draw_count() == 100 * 4);
}

TEST_CASE("no anchoring signal means no aggregation") {
    FullSimConfig cfg;
    Rng rng(5);
    std::vector<BeadState> beads = {{0.5, 0.5}, {0.54, 0.5}};
    const Field2D zero_field(cfg.geom.cells, cfg.geom.cells, 0.0);
    BondList bonds;
    for (int i = 0; i < 200; ++i) {
        bonds = aggregation_step(beads, bonds, zero_field, cfg.geom, cfg, cfg.dt, rng);
        REQUIRE(bonds.empty());
    }
}

TEST_CASE("pair merge probability follows the exponential law") {
    FullSimConfig cfg;
    const double c = 50.0, dt = 1.0;
    const double p_expected = 1.0 - std::exp(-cfg.physics.k_agg * c * dt);
    const Field2D anchor(cfg.geom.cells, cfg.geom.cells, c);
    const std::vector<BeadState> beads = {{0.5, 0.5}, {0.55, 0.5}};  // contact: 0.05 < 0.1

    const int trials = 4000;
    int merged = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(999, {static_cast<std::uint64_t>(t)}));
        const auto bonds = aggregation_step(beads, {}, anchor, cfg.geom, cfg, dt, rng);
        if (!bonds.empty()) ++merged;
    }
    const double p_hat = static_cast<double>(merged) / trials;
    const double sigma = std::sqrt(p_expected * (1.0 - p_expected) / trials);
    REQUIRE(std::abs(p_hat - p_expected) < 4.0 * sigma);
}

TEST_CASE("beads out of contact never merge") {
    FullSimConfig cfg;
    Rng rng(6);
    const Field2D anchor(cfg.geom.cells, cfg.geom.cells, 1000.0);
    const std::vector<BeadState> beads = {{0.2, 0.2}, {0.8, 0.8}};
    for (int i = 0; i < 100; ++i)
        REQUIRE(aggregation_step(beads, {}, anchor, cfg.geom, cfg, 1.0, rng).empty());
}

TEST_CASE("without disaggregation the number of independent units never grows") {
    FullSimConfig cfg;
    cfg.physics.k_deagg = 0.0;
    cfg.geom = ArenaGeometry{0.5, 32};
    Rng rng(8);
    std::vector<BeadState> beads;
    Rng place(99);
    for (int i = 0; i < 20; ++i) beads.push_back({place.uniform01() * 0.5, place.uniform01() * 0.5});
    const Field2D anchor(32, 32, 30.0);

    BondList bonds;
    auto units = [&]() {
        const auto clusters = bond_components(static_cast<int>(beads.size()), bonds);
        std::size_t clustered = 0;
        for (const auto& c : clusters) clustered += c.size();
        return clusters.size() + (beads.size() - clustered);
    };
    std::size_t prev = units();
    for (int step = 0; step < 100; ++step) {
        bonds = aggregation_step(beads, bonds, anchor, cfg.geom, cfg, 1.0, rng);
        const std::size_t now = units();
        REQUIRE(now <= prev);
        prev = now;
    }
}

TEST_CASE("bond break probability follows the disaggregation rate") {
    FullSimConfig cfg;
    cfg.physics.k_deagg = 1.0;
    const double dt = 1.0;
    const double p_expected = 1.0 - std::exp(-cfg.physics.k_deagg * dt);
    const Field2D anchor(cfg.geom.cells, cfg.geom.cells, 0.0);  // no new merges
    const std::vector<BeadState> beads = {{0.5, 0.5}, {0.55, 0.5}};

    const int trials = 4000;
    int broken = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(1234, {static_cast<std::uint64_t>(t)}));
        const auto bonds = aggregation_step(beads, {{0, 1}}, anchor, cfg.geom, cfg, dt, rng);
        if (bonds.empty()) ++broken;
    }
    const double p_hat = static_cast<double>(broken) / trials;
    const double sigma = std::sqrt(p_expected * (1.0 - p_expected) / trials);
    REQUIRE(std::abs(p_hat - p_expected) < 4.0 * sigma);
}

TEST_CASE("merges are transitive within one step") {
    FullSimConfig cfg;
    // Three beads in a row, each adjacent pair in contact, huge propensity.
    cfg.physics.k_agg = 1000.0;
    const Field2D anchor(cfg.geom.cells, cfg.geom.cells, 1000.0);
    const std::vector<BeadState> beads = {{0.3, 0.5}, {0.39, 0.5}, {0.48, 0.5}};
    Rng rng(11);
    const auto bonds = aggregation_step(beads, {}, anchor, cfg.geom, cfg, 1.0, rng);
    const auto clusters = bond_components(3, bonds);
    REQUIRE(clusters.size() == 1);
    REQUIRE(clusters[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("deposition rasterizes additive disks") {
    ArenaGeometry geom{1.0, 160};
    const CrnGenome g = feed_genome();

    const auto empty = deposit_templates({}, g, geom, 50.0);
    REQUIRE(empty.weight.sum() == 0.0);

    const std::vector<BeadState> one = {{0.43, 0.61}};
    const auto single = deposit_templates(one, g, geom, 50.0);
    // Brute-force disk rasterization oracle.
    const double r = 50.0 * 1e-3;
    int covered = 0;
    for (int iy = 0; iy < geom.cells; ++iy)
        for (int ix = 0; ix < geom.cells; ++ix) {
            const double dx = geom.cell_center(ix) - 0.43;
            const double dy = geom.cell_center(iy) - 0.61;
            if (dx * dx + dy * dy <= r * r) ++covered;
        }
    REQUIRE(covered > 0);
    REQUIRE(single.weight.sum() == Approx(static_cast<double>(covered)));
    // Template density = concentration x coverage count.
    double total = 0.0;
    for (int iy = 0; iy < geom.cells; ++iy)
        for (int ix = 0; ix < geom.cells; ++ix) total += single.density(0, ix, iy);
    REQUIRE(total == Approx(100.0 * covered));

    const std::vector<BeadState> two = {{0.43, 0.61}, {0.43, 0.61}};
    const auto doubled = deposit_templates(two, g, geom, 50.0);
    for (std::size_t i = 0; i < doubled.weight.data.size(); ++i)
        REQUIRE(doubled.weight.data[i] == 2.0 * single.weight.data[i]);
}

TEST_CASE("disabled templates are not deposited") {
    ArenaGeometry geom{1.0, 32};
    CrnGenome g = feed_genome();
    g.templates.push_back({1, 2, 2, 77.0, std::nullopt, false});
    const auto map = deposit_templates({{0.5, 0.5}}, g, geom, 50.0);
    REQUIRE(map.template_ids == std::vector<int>{0});
}

TEST_CASE("default configuration matches the reference scale") {
    const FullSimConfig cfg;
    REQUIRE(cfg.geom.cells == 160);
    REQUIRE(cfg.geom.side_mm == 1.0);
    REQUIRE(cfg.steps == 4000);
    REQUIRE(cfg.dt == 0.1);
    REQUIRE(cfg.beads.count == 500);
    REQUIRE(cfg.beads.r_agg_um == 50.0);
    REQUIRE(cfg.beads.r_motion_um == 5.0);
    REQUIRE(cfg.physics.temperature == 316.15);
}

TEST_CASE("full runs are deterministic and conserve beads") {
    FullSimConfig cfg;
    cfg.geom = ArenaGeometry{1.0, 32};
    cfg.steps = 40;
    cfg.beads.count = 25;
    const CrnGenome g = feed_genome();

    const auto a = run_full(g, cfg, 2024);
    const auto b = run_full(g, cfg, 2024);
    REQUIRE(a.beads.size() == 25);
    REQUIRE(a.rng_draws == b.rng_draws);
    REQUIRE(a.bonds == b.bonds);
    for (std::size_t i = 0; i < a.beads.size(); ++i) {
        REQUIRE(a.beads[i].x == b.beads[i].x);
        REQUIRE(a.beads[i].y == b.beads[i].y);
        REQUIRE(a.beads[i].x >= 0.0);
        REQUIRE(a.beads[i].x <= 1.0);
    }
    for (std::size_t s = 0; s < a.fields.fields.size(); ++s)
        REQUIRE(a.fields.fields[s].data == b.fields.fields[s].data);

    const auto c = run_full(g, cfg, 2025);
    bool same = true;
    for (std::size_t i = 0; i < a.beads.size(); ++i)
        if (a.beads[i].x != c.beads[i].x) same = false;
    REQUIRE_FALSE(same);
}

TEST_CASE("cluster membership is a partition") {
    FullSimConfig cfg;
    cfg.geom = ArenaGeometry{0.4, 32};  // dense arena to force aggregation
    cfg.steps = 60;
    cfg.beads.count = 40;
    cfg.physics.k_agg = 10.0;
    CrnGenome g = feed_genome();
    const auto res = run_full(g, cfg, 77);

    std::set<int> seen;
    for (const auto& cluster : res.clusters) {
        REQUIRE(cluster.size() >= 2);
        for (int m : cluster) {
            REQUIRE(m >= 0);
            REQUIRE(m < 40);
            REQUIRE(seen.insert(m).second);
        }
    }
}

TEST_CASE("zero anchoring production yields zero clusters") {
    FullSimConfig cfg;
    cfg.geom = ArenaGeometry{0.4, 32};
    cfg.steps = 60;
    cfg.beads.count = 40;
    cfg.physics.k_agg = 10.0;
    // The base autocatalytic loop starts from a zero field: nothing is ever
    // produced, so the anchor signal stays identically zero.
    const auto res = run_full(base_individual(), cfg, 123);
    REQUIRE(res.clusters.empty());
    REQUIRE(res.bonds.empty());
}
