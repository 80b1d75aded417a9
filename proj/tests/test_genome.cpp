#include <catch2/catch_amalgamated.hpp>

#include <crnswarm/genome.hpp>
#include <crnswarm/mutation.hpp>
#include <crnswarm/rng.hpp>

using namespace crnswarm;

namespace {

// Two gradients, anchor, one internal, one inhibitor; three templates.
CrnGenome worked_genome() {
    CrnGenome g;
    g.species.push_back({0, SpeciesKind::gradient_input, 0.005, 5e-4});
    g.species.push_back({1, SpeciesKind::gradient_input, 0.005, 5e-4});
    g.species.push_back({2, SpeciesKind::anchoring, 0.1, 5e-4});
    g.species.push_back({3, SpeciesKind::internal, 0.2, 5e-4});
    g.species.push_back({4, SpeciesKind::inhibitor, 0.3, 5e-4});
    g.templates.push_back({0, 0, 3, 25.0, std::nullopt, true});
    g.templates.push_back({1, 3, 2, 50.0, 4, true});
    g.templates.push_back({2, 3, 4, 10.0, std::nullopt, true});
    return g;
}

}  // namespace

TEST_CASE("base individual is valid under the baseline limits") {
    const CrnGenome g = base_individual();
    const auto rep = validate(g, TopologyLimits::bioneat_defaults());
    REQUIRE(rep.well_formed());
    REQUIRE(rep.valid());
    REQUIRE(g.anchor_id() == 2);
    const auto f = count_features(g);
    REQUIRE(f.total == 1);
    REQUIRE(f.activation == 1);
    REQUIRE(f.inhibition == 0);
}

TEST_CASE("base individual violates the MAP-Elites minimum template count") {
    const auto rep = validate(base_individual(), TopologyLimits::map_elites_defaults());
    REQUIRE(rep.well_formed());
    REQUIRE_FALSE(rep.valid());
}

TEST_CASE("count_features distinguishes activation and inhibition") {
    const CrnGenome g = worked_genome();
    const auto f = count_features(g);
    REQUIRE(f.total == 3);
    REQUIRE(f.activation == 2);  // templates 0 and 1
    REQUIRE(f.inhibition == 1);  // template 2 outputs an inhibitor
}

TEST_CASE("disabled templates do not count") {
    CrnGenome g = worked_genome();
    g.templates[2].enabled = false;
    // Template 1 still references inhibitor species 4, which now has no
    // enabled producer; feature counting only looks at enabled templates.
    REQUIRE(count_features(g).total == 2);
}

TEST_CASE("validate flags duplicate species ids as structural") {
    CrnGenome g = worked_genome();
    g.species.push_back({3, SpeciesKind::internal, 0.1, 5e-4});
    const auto rep = validate(g, TopologyLimits::bioneat_defaults());
    REQUIRE_FALSE(rep.well_formed());
}

TEST_CASE("validate flags dangling template references") {
    CrnGenome g = worked_genome();
    g.templates[0].input = 42;
    REQUIRE_FALSE(validate(g, TopologyLimits::bioneat_defaults()).well_formed());

    CrnGenome h = worked_genome();
    h.templates[1].inhibitor = 3;  // species 3 is internal, not an inhibitor
    REQUIRE_FALSE(validate(h, TopologyLimits::bioneat_defaults()).well_formed());
}

TEST_CASE("validate enforces the template count range") {
    CrnGenome g = worked_genome();
    IdSource ids = IdSource::after(g);
    while (count_features(g).total < 14)
        g.templates.push_back({ids.template_id(), 2, 2, 25.0, std::nullopt, true});
    const auto rep = validate(g, TopologyLimits::bioneat_defaults());
    REQUIRE(rep.well_formed());
    bool mentions_count = false;
    for (const auto& v : rep.violations)
        if (v.find("14") != std::string::npos) mentions_count = true;
    REQUIRE(mentions_count);
}

TEST_CASE("validate enforces parameter bounds on enabled elements only") {
    CrnGenome g = worked_genome();
    g.templates[0].concentration = 0.5;  // below conc_min = 1
    REQUIRE_FALSE(validate(g, TopologyLimits::bioneat_defaults()).valid());

    CrnGenome h = worked_genome();
    h.templates[0].concentration = 0.5;
    h.templates[0].enabled = false;
    REQUIRE(validate(h, TopologyLimits::bioneat_defaults()).valid());

    CrnGenome k = worked_genome();
    k.species[3].degradation_rate = 2.0;  // above deg_max = 1
    REQUIRE_FALSE(validate(k, TopologyLimits::bioneat_defaults()).valid());
}

TEST_CASE("gradient species are exempt from evolvable bounds") {
    CrnGenome g = worked_genome();
    g.species[0].degradation_rate = 0.005;  // below deg_min, allowed
    REQUIRE(validate(g, TopologyLimits::bioneat_defaults()).valid());
}

TEST_CASE("validate requires exactly two gradients and one anchor") {
    CrnGenome g = worked_genome();
    g.species[1].kind = SpeciesKind::internal;
    REQUIRE_FALSE(validate(g, TopologyLimits::bioneat_defaults()).valid());

    CrnGenome h = worked_genome();
    h.species[3].kind = SpeciesKind::anchoring;
    REQUIRE_FALSE(validate(h, TopologyLimits::bioneat_defaults()).valid());
}

TEST_CASE("activation signal cap counts anchoring plus internal species") {
    CrnGenome g = worked_genome();
    IdSource ids = IdSource::after(g);
    // Already 2 activation species (anchor + internal); push to 7.
    for (int i = 0; i < 5; ++i)
        g.species.push_back({ids.species_id(), SpeciesKind::internal, 0.1, 5e-4});
    const auto rep = validate(g, TopologyLimits::bioneat_defaults());
    REQUIRE(rep.well_formed());
    REQUIRE_FALSE(rep.valid());
}

TEST_CASE("each inhibitor species must be targeted by exactly one template") {
    CrnGenome g = worked_genome();
    g.templates[1].inhibitor = std::nullopt;  // species 4 now targets nothing
    REQUIRE_FALSE(validate(g, TopologyLimits::bioneat_defaults()).valid());
}

TEST_CASE("evolvable parameter ordering is canonical") {
    const CrnGenome g = worked_genome();
    const auto refs = evolvable_parameters(g);
    // 3 enabled template concentrations, then 3 non-gradient degradations.
    REQUIRE(refs.size() == 6);
    REQUIRE(refs[0].kind == ParamKind::template_concentration);
    REQUIRE(refs[0].id == 0);
    REQUIRE(refs[2].id == 2);
    REQUIRE(refs[3].kind == ParamKind::species_degradation);
    REQUIRE(refs[3].id == 2);
    REQUIRE(refs[5].id == 4);

    const auto vals = extract_parameters(g);
    REQUIRE(vals == std::vector<double>{25.0, 50.0, 10.0, 0.1, 0.2, 0.3});
}

TEST_CASE("inject_parameters round-trips and clamps") {
    const CrnGenome g = worked_genome();
    auto vals = extract_parameters(g);
    const auto same = inject_parameters(g, vals);
    REQUIRE(same.genome == g);
    REQUIRE_FALSE(same.clamped);

    vals[0] = 500.0;  // above conc_max
    const auto clamped = inject_parameters(g, vals);
    REQUIRE(clamped.clamped);
    REQUIRE(clamped.genome.templates[0].concentration == 200.0);

    vals.pop_back();
    REQUIRE_THROWS_AS(inject_parameters(g, vals), std::invalid_argument);
}

TEST_CASE("serialization round-trips exactly") {
    const CrnGenome g = worked_genome();
    REQUIRE(deserialize_genome(serialize_genome(g)) == g);
}

TEST_CASE("random genomes survive a serialization round trip") {
    Rng rng(2024);
    MutationConfig mcfg;
    const auto limits = TopologyLimits::bioneat_defaults();
    TopoInitConfig tcfg;
    tcfg.t_min = 1;
    tcfg.t_max = 13;
    for (int i = 0; i < 200; ++i) {
        IdSource ids;
        CrnGenome g = topological_init(tcfg, mcfg, limits, rng, ids);
        g.lineage_id = i;
        REQUIRE(deserialize_genome(serialize_genome(g)) == g);
    }
}

TEST_CASE("deserialize rejects malformed input") {
    REQUIRE_THROWS_AS(deserialize_genome("not json at all"), ParseError);
    REQUIRE_THROWS_AS(deserialize_genome("{}"), ParseError);

    CrnGenome g = worked_genome();
    json j = genome_to_json(g);
    j["version"] = 99;
    REQUIRE_THROWS_AS(genome_from_json(j), ParseError);

    json bad = genome_to_json(worked_genome());
    bad["templates"][0]["input"] = 1234;  // dangling reference
    REQUIRE_THROWS_AS(genome_from_json(bad), ParseError);
}

TEST_CASE("deserialize preserves roles needed downstream") {
    // A genome missing its anchor can't be simulated; the loader rejects it.
    CrnGenome g = worked_genome();
    g.species[2].kind = SpeciesKind::internal;
    json j = genome_to_json(g);
    REQUIRE_THROWS_AS(genome_from_json(j), ParseError);
}
