#pragma once
// MAP-Elites archive: one elite per template-count bin, strict-improvement
// replacement, deterministic JSON persistence.

#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "crnswarm/genome.hpp"
#include "json.hpp"

namespace crnswarm {

struct Elite {
    CrnGenome genome;
    double fitness = -std::numeric_limits<double>::infinity();
    long eval_index = -1;  // evaluation the stored fitness came from
};

/// Bins are keyed by enabled-template count over [min_key, max_key]. A
/// candidate lands in its recomputed bin and replaces the incumbent only on
/// strictly greater fitness; ties keep the incumbent. Candidates outside the
/// key range are rejected.
class EliteArchive {
public:
    EliteArchive(int min_key, int max_key) : min_key_(min_key), max_key_(max_key) {
        if (min_key > max_key) throw std::invalid_argument("EliteArchive: min_key > max_key");
    }

    int min_key() const { return min_key_; }
    int max_key() const { return max_key_; }
    int bin_count() const { return max_key_ - min_key_ + 1; }

    static int key_of(const CrnGenome& genome) { return count_features(genome).total; }

    bool insert(const CrnGenome& genome, double fitness, long eval_index) {
        const int key = key_of(genome);
        if (key < min_key_ || key > max_key_) return false;
        auto it = bins_.find(key);
        if (it != bins_.end() && !(fitness > it->second.fitness)) return false;
        bins_[key] = Elite{genome, fitness, eval_index};
        return true;
    }

    const Elite* at(int key) const {
        auto it = bins_.find(key);
        return it == bins_.end() ? nullptr : &it->second;
    }

    std::vector<int> filled_keys() const {
        std::vector<int> keys;
        keys.reserve(bins_.size());
        for (const auto& [key, elite] : bins_) keys.push_back(key);
        return keys;  // std::map: ascending
    }

    std::size_t filled() const { return bins_.size(); }
    bool empty() const { return bins_.empty(); }

    /// Highest-fitness elite; ties resolve to the lowest key. Null if empty.
    const Elite* best() const {
        const Elite* best = nullptr;
        for (const auto& [key, elite] : bins_)
            if (!best || elite.fitness > best->fitness) best = &elite;
        return best;
    }

    void clear() { bins_.clear(); }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["min_key"] = min_key_;
        j["max_key"] = max_key_;
        j["bins"] = nlohmann::json::array();
        for (const auto& [key, elite] : bins_) {
            nlohmann::json b;
            b["key"] = key;
            if (std::isinf(elite.fitness))
                b["fitness"] = nullptr;
            else
                b["fitness"] = elite.fitness;
            b["eval"] = elite.eval_index;
            b["genome"] = genome_to_json(elite.genome);
            j["bins"].push_back(b);
        }
        return j;
    }

    static EliteArchive from_json(const nlohmann::json& j) {
        EliteArchive archive(j.at("min_key").get<int>(), j.at("max_key").get<int>());
        for (const auto& b : j.at("bins")) {
            Elite elite;
            elite.genome = genome_from_json(b.at("genome"));
            elite.fitness =
                b.at("fitness").is_null() ? -std::numeric_limits<double>::infinity() : b.at("fitness").get<double>();
            elite.eval_index = b.at("eval").get<long>();
            archive.bins_[b.at("key").get<int>()] = std::move(elite);
        }
        return archive;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::out | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write archive file '" + path + "'");
        out << to_json().dump(2) << '\n';
    }

    static EliteArchive load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read archive file '" + path + "'");
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }

private:
    int min_key_;
    int max_key_;
    std::map<int, Elite> bins_;
};

}  // namespace crnswarm
