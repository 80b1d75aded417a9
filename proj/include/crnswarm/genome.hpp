#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace crnswarm {

using json = nlohmann::json;

/// Thrown by deserialize_genome on malformed or invalid input.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SpeciesKind { gradient_input, anchoring, internal, inhibitor };

inline const char* to_string(SpeciesKind k) {
    switch (k) {
        case SpeciesKind::gradient_input: return "gradient_input";
        case SpeciesKind::anchoring: return "anchoring";
        case SpeciesKind::internal: return "internal";
        case SpeciesKind::inhibitor: return "inhibitor";
    }
    return "?";
}

inline SpeciesKind species_kind_from_string(const std::string& s) {
    if (s == "gradient_input") return SpeciesKind::gradient_input;
    if (s == "anchoring") return SpeciesKind::anchoring;
    if (s == "internal") return SpeciesKind::internal;
    if (s == "inhibitor") return SpeciesKind::inhibitor;
    throw ParseError("unknown species kind '" + s + "'");
}

/// A diffusing DNA signal strand. degradation_rate is the evolvable
/// "stability" parameter (1/min, lower = more stable); diffusion_coeff is
/// mm^2/min. Gradient-input species keep fixed parameters.
struct SignalSpecies {
    int id = 0;
    SpeciesKind kind = SpeciesKind::internal;
    double degradation_rate = 0.1;
    double diffusion_coeff = 5e-4;

    bool operator==(const SignalSpecies&) const = default;
};

/// A template strand grafted on the beads: converts the input signal into
/// the output signal at a rate set by its concentration (nM). A template
/// whose output species is an inhibitor counts as an inhibition template.
struct TemplateStrand {
    int id = 0;
    int input = 0;
    int output = 0;
    double concentration = 25.0;
    std::optional<int> inhibitor;  // id of the inhibitor species blocking this template
    bool enabled = true;

    bool operator==(const TemplateStrand&) const = default;
};

struct CrnGenome {
    std::vector<SignalSpecies> species;
    std::vector<TemplateStrand> templates;
    std::int64_t lineage_id = 0;

    bool operator==(const CrnGenome&) const = default;

    const SignalSpecies* find_species(int id) const {
        for (const auto& s : species)
            if (s.id == id) return &s;
        return nullptr;
    }
    SignalSpecies* find_species(int id) {
        for (auto& s : species)
            if (s.id == id) return &s;
        return nullptr;
    }
    const TemplateStrand* find_template(int id) const {
        for (const auto& t : templates)
            if (t.id == id) return &t;
        return nullptr;
    }

    /// Id of the anchoring species; -1 if absent.
    int anchor_id() const {
        for (const auto& s : species)
            if (s.kind == SpeciesKind::anchoring) return s.id;
        return -1;
    }
};

/// Bounds for the evolvable continuous parameters.
struct ParamBounds {
    double conc_min = 1.0;
    double conc_max = 200.0;
    double deg_min = 0.01;
    double deg_max = 1.0;

    bool operator==(const ParamBounds&) const = default;
};

/// Topology validity limits. The template-count range differs per
/// algorithm (BioNEAT 1-13, MAP-Elites 7-13); the caps are shared.
struct TopologyLimits {
    int min_templates = 1;
    int max_templates = 13;
    int max_activation_signals = 6;
    int max_activation_templates = 7;
    int max_inhibition_templates = 7;
    ParamBounds bounds;

    static TopologyLimits bioneat_defaults() { return {}; }
    static TopologyLimits map_elites_defaults() {
        TopologyLimits l;
        l.min_templates = 7;
        return l;
    }

    bool operator==(const TopologyLimits&) const = default;
};

/// Parameters used when new species are created (base individual and the
/// add-signal / add-inhibition operators). Gradient species are frozen to
/// these values so the sensing environment is identical across individuals.
struct SpeciesDefaults {
    double gradient_degradation = 0.005;  // 1/min, fixed
    double gradient_diffusion = 5e-4;     // mm^2/min, fixed
    double signal_diffusion = 5e-4;       // mm^2/min for evolved species
    double base_degradation = 0.1;        // anchoring species in the base individual
    double base_concentration = 25.0;     // the base autocatalytic template

    bool operator==(const SpeciesDefaults&) const = default;
};

struct FeatureDescriptor {
    int total = 0;        // enabled templates; the MAP-Elites bin key
    int activation = 0;   // enabled, output kind != inhibitor
    int inhibition = 0;   // enabled, output kind == inhibitor
    int species_count = 0;
};

inline FeatureDescriptor count_features(const CrnGenome& g) {
    FeatureDescriptor f;
    f.species_count = static_cast<int>(g.species.size());
    for (const auto& t : g.templates) {
        if (!t.enabled) continue;
        const SignalSpecies* out = g.find_species(t.output);
        if (out != nullptr && out->kind == SpeciesKind::inhibitor)
            ++f.inhibition;
        else
            ++f.activation;
    }
    f.total = f.activation + f.inhibition;
    return f;
}

struct ValidityReport {
    std::vector<std::string> structural;  // dangling references, duplicate ids
    std::vector<std::string> violations;  // limit / bound violations

    bool well_formed() const { return structural.empty(); }
    bool valid() const { return structural.empty() && violations.empty(); }
};

inline ValidityReport validate(const CrnGenome& g, const TopologyLimits& limits) {
    ValidityReport rep;

    std::vector<int> seen_species;
    for (const auto& s : g.species) {
        if (std::find(seen_species.begin(), seen_species.end(), s.id) != seen_species.end())
            rep.structural.push_back("duplicate species id " + std::to_string(s.id));
        seen_species.push_back(s.id);
    }
    std::vector<int> seen_templates;
    for (const auto& t : g.templates) {
        if (std::find(seen_templates.begin(), seen_templates.end(), t.id) != seen_templates.end())
            rep.structural.push_back("duplicate template id " + std::to_string(t.id));
        seen_templates.push_back(t.id);
        if (g.find_species(t.input) == nullptr)
            rep.structural.push_back("template " + std::to_string(t.id) + ": dangling input species " +
                                     std::to_string(t.input));
        if (g.find_species(t.output) == nullptr)
            rep.structural.push_back("template " + std::to_string(t.id) + ": dangling output species " +
                                     std::to_string(t.output));
        if (t.inhibitor) {
            const SignalSpecies* v = g.find_species(*t.inhibitor);
            if (v == nullptr)
                rep.structural.push_back("template " + std::to_string(t.id) + ": dangling inhibitor species " +
                                         std::to_string(*t.inhibitor));
            else if (v->kind != SpeciesKind::inhibitor)
                rep.structural.push_back("template " + std::to_string(t.id) + ": inhibitor reference " +
                                         std::to_string(*t.inhibitor) + " is not an inhibitor species");
        }
    }
    if (!rep.structural.empty()) return rep;

    auto flag = [&rep](const std::string& msg) { rep.violations.push_back(msg); };

    int gradients = 0, anchors = 0, activation_species = 0;
    for (const auto& s : g.species) {
        switch (s.kind) {
            case SpeciesKind::gradient_input: ++gradients; break;
            case SpeciesKind::anchoring: ++anchors; ++activation_species; break;
            case SpeciesKind::internal: ++activation_species; break;
            case SpeciesKind::inhibitor: break;
        }
        if (s.degradation_rate <= 0.0)
            flag("species " + std::to_string(s.id) + ": degradation rate must be > 0");
        else if (s.kind != SpeciesKind::gradient_input &&
                 (s.degradation_rate < limits.bounds.deg_min || s.degradation_rate > limits.bounds.deg_max))
            flag("species " + std::to_string(s.id) + ": degradation rate " + std::to_string(s.degradation_rate) +
                 " outside bounds");
        if (s.diffusion_coeff < 0.0)
            flag("species " + std::to_string(s.id) + ": negative diffusion coefficient");
    }
    if (gradients != 2) flag("gradient species " + std::to_string(gradients) + " != 2");
    if (anchors != 1) flag("anchoring species " + std::to_string(anchors) + " != 1");
    if (activation_species > limits.max_activation_signals)
        flag("activation signals " + std::to_string(activation_species) + " > " +
             std::to_string(limits.max_activation_signals));

    for (const auto& t : g.templates) {
        if (g.find_species(t.output)->kind == SpeciesKind::gradient_input)
            flag("template " + std::to_string(t.id) + ": gradient-input species cannot be produced");
        if (t.concentration <= 0.0)
            flag("template " + std::to_string(t.id) + ": concentration must be > 0");
        else if (t.enabled &&
                 (t.concentration < limits.bounds.conc_min || t.concentration > limits.bounds.conc_max))
            flag("template " + std::to_string(t.id) + ": concentration " + std::to_string(t.concentration) +
                 " outside bounds");
    }

    // Each inhibitor species blocks exactly one template.
    for (const auto& s : g.species) {
        if (s.kind != SpeciesKind::inhibitor) continue;
        int refs = 0;
        for (const auto& t : g.templates)
            if (t.inhibitor && *t.inhibitor == s.id) ++refs;
        if (refs != 1)
            flag("inhibitor species " + std::to_string(s.id) + " targets " + std::to_string(refs) +
                 " templates, expected 1");
    }

    const FeatureDescriptor f = count_features(g);
    if (f.total < limits.min_templates)
        flag("template count " + std::to_string(f.total) + " < " + std::to_string(limits.min_templates));
    if (f.total > limits.max_templates)
        flag("template count " + std::to_string(f.total) + " > " + std::to_string(limits.max_templates));
    if (f.activation > limits.max_activation_templates)
        flag("activation templates " + std::to_string(f.activation) + " > " +
             std::to_string(limits.max_activation_templates));
    if (f.inhibition > limits.max_inhibition_templates)
        flag("inhibition templates " + std::to_string(f.inhibition) + " > " +
             std::to_string(limits.max_inhibition_templates));

    return rep;
}

/// The base individual of the topological initialization: 2 gradient
/// inputs, 1 anchoring species, one autocatalytic activation template on
/// the anchoring signal.
inline CrnGenome base_individual(const SpeciesDefaults& d = {}) {
    CrnGenome g;
    g.species.push_back({0, SpeciesKind::gradient_input, d.gradient_degradation, d.gradient_diffusion});
    g.species.push_back({1, SpeciesKind::gradient_input, d.gradient_degradation, d.gradient_diffusion});
    g.species.push_back({2, SpeciesKind::anchoring, d.base_degradation, d.signal_diffusion});
    g.templates.push_back({0, 2, 2, d.base_concentration, std::nullopt, true});
    return g;
}

// ---------------------------------------------------------------------------
// Evolvable parameter vector

enum class ParamKind { template_concentration, species_degradation };

struct ParamRef {
    ParamKind kind;
    int id;  // template id or species id
};

/// Canonical parameter ordering: enabled template concentrations by id,
/// then non-gradient species degradation rates by id.
inline std::vector<ParamRef> evolvable_parameters(const CrnGenome& g) {
    std::vector<ParamRef> refs;
    std::vector<int> tids, sids;
    for (const auto& t : g.templates)
        if (t.enabled) tids.push_back(t.id);
    for (const auto& s : g.species)
        if (s.kind != SpeciesKind::gradient_input) sids.push_back(s.id);
    std::sort(tids.begin(), tids.end());
    std::sort(sids.begin(), sids.end());
    for (int id : tids) refs.push_back({ParamKind::template_concentration, id});
    for (int id : sids) refs.push_back({ParamKind::species_degradation, id});
    return refs;
}

inline std::pair<double, double> param_bounds_for(ParamKind k, const ParamBounds& b) {
    if (k == ParamKind::template_concentration) return {b.conc_min, b.conc_max};
    return {b.deg_min, b.deg_max};
}

inline std::vector<double> extract_parameters(const CrnGenome& g) {
    std::vector<double> v;
    for (const ParamRef& r : evolvable_parameters(g)) {
        if (r.kind == ParamKind::template_concentration)
            v.push_back(g.find_template(r.id)->concentration);
        else
            v.push_back(g.find_species(r.id)->degradation_rate);
    }
    return v;
}

struct InjectResult {
    CrnGenome genome;
    bool clamped = false;  // warning flag: at least one value was out of bounds
};

/// Writes a parameter vector back into a genome. Out-of-bounds values are
/// clamped and flagged so CMA-ES can run unconstrained internally.
inline InjectResult inject_parameters(const CrnGenome& g, const std::vector<double>& values,
                                      const ParamBounds& bounds = {}) {
    const std::vector<ParamRef> refs = evolvable_parameters(g);
    if (values.size() != refs.size())
        throw std::invalid_argument("inject_parameters: expected " + std::to_string(refs.size()) +
                                    " values, got " + std::to_string(values.size()));
    InjectResult out{g, false};
    for (std::size_t i = 0; i < refs.size(); ++i) {
        auto [lo, hi] = param_bounds_for(refs[i].kind, bounds);
        double v = values[i];
        if (v < lo || v > hi) {
            v = std::clamp(v, lo, hi);
            out.clamped = true;
        }
        if (refs[i].kind == ParamKind::template_concentration) {
            for (auto& t : out.genome.templates)
                if (t.id == refs[i].id) t.concentration = v;
        } else {
            for (auto& s : out.genome.species)
                if (s.id == refs[i].id) s.degradation_rate = v;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization (versioned JSON document, lossless round trip)

inline constexpr int kGenomeFormatVersion = 1;
inline constexpr const char* kGenomeFormatName = "crnswarm-genome";

inline json genome_to_json(const CrnGenome& g) {
    json species = json::array();
    for (const auto& s : g.species)
        species.push_back({{"id", s.id},
                           {"kind", to_string(s.kind)},
                           {"degradation_rate", s.degradation_rate},
                           {"diffusion_coeff", s.diffusion_coeff}});
    json templates = json::array();
    for (const auto& t : g.templates) {
        json jt = {{"id", t.id},
                   {"input", t.input},
                   {"output", t.output},
                   {"concentration", t.concentration},
                   {"enabled", t.enabled}};
        jt["inhibitor"] = t.inhibitor ? json(*t.inhibitor) : json(nullptr);
        templates.push_back(std::move(jt));
    }
    return {{"format", kGenomeFormatName},
            {"version", kGenomeFormatVersion},
            {"lineage_id", g.lineage_id},
            {"species", species},
            {"templates", templates}};
}

inline CrnGenome genome_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("genome document: expected an object");
    if (j.value("format", std::string()) != kGenomeFormatName)
        throw ParseError("genome document: missing or wrong 'format' field");
    const int version = j.value("version", -1);
    if (version != kGenomeFormatVersion)
        throw ParseError("genome document: unsupported format version " + std::to_string(version));

    CrnGenome g;
    g.lineage_id = j.value("lineage_id", std::int64_t{0});
    try {
        for (const auto& js : j.at("species")) {
            SignalSpecies s;
            s.id = js.at("id").get<int>();
            s.kind = species_kind_from_string(js.at("kind").get<std::string>());
            s.degradation_rate = js.at("degradation_rate").get<double>();
            s.diffusion_coeff = js.at("diffusion_coeff").get<double>();
            g.species.push_back(s);
        }
        for (const auto& jt : j.at("templates")) {
            TemplateStrand t;
            t.id = jt.at("id").get<int>();
            t.input = jt.at("input").get<int>();
            t.output = jt.at("output").get<int>();
            t.concentration = jt.at("concentration").get<double>();
            t.enabled = jt.at("enabled").get<bool>();
            if (!jt.at("inhibitor").is_null()) t.inhibitor = jt.at("inhibitor").get<int>();
            g.templates.push_back(t);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("genome document: ") + e.what());
    }

    // Structural and species-count checks happen at load so a broken file is
    // rejected with context instead of failing deep inside a simulation.
    TopologyLimits wide;
    wide.min_templates = 0;
    wide.max_templates = std::numeric_limits<int>::max();
    ValidityReport rep = validate(g, wide);
    if (!rep.well_formed()) throw ParseError("genome document: " + rep.structural.front());
    int anchors = 0, gradients = 0;
    for (const auto& s : g.species) {
        if (s.kind == SpeciesKind::anchoring) ++anchors;
        if (s.kind == SpeciesKind::gradient_input) ++gradients;
    }
    if (anchors != 1)
        throw ParseError("genome document: expected exactly 1 anchoring species, found " + std::to_string(anchors));
    if (gradients != 2)
        throw ParseError("genome document: expected exactly 2 gradient-input species, found " +
                         std::to_string(gradients));
    return g;
}

inline std::string serialize_genome(const CrnGenome& g) { return genome_to_json(g).dump(2) + "\n"; }

inline CrnGenome deserialize_genome(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("genome document: ") + e.what());
    }
    return genome_from_json(j);
}

/// Monotonic id allocator shared by all mutations of one optimization run,
/// so that equal ids across genomes of a run imply a common origin
/// (NEAT-style historical marking, used by the speciation distance).
struct IdSource {
    int next_species = 0;
    int next_template = 0;

    int species_id() { return next_species++; }
    int template_id() { return next_template++; }

    void ensure_covers(const CrnGenome& g) {
        for (const auto& s : g.species) next_species = std::max(next_species, s.id + 1);
        for (const auto& t : g.templates) next_template = std::max(next_template, t.id + 1);
    }
    static IdSource after(const CrnGenome& g) {
        IdSource ids;
        ids.ensure_covers(g);
        return ids;
    }
};

}  // namespace crnswarm
