#pragma once

#include <memory>
#include <random>
#include <vector>

#include "geoidx/scenario.hpp"

namespace geoidx::workload {

/// Rank sampler with P(rank r) proportional to 1 / (r + 1)^theta over n ranks.
class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double theta);

    std::size_t operator()(std::mt19937_64& rng) { return dist_(rng); }
    /// Analytic probability of rank r (0-based).
    double mass(std::size_t r) const;
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    double theta_;
    double norm_;
    std::discrete_distribution<std::size_t> dist_;
};

struct Distribution {
    enum class Kind { Uniform, Zipf };
    Kind kind = Kind::Uniform;
    double theta = 1.0;
    /// Text attributes draw from these; numeric ones may too.
    std::vector<Value> values;
    /// Numeric attributes without values: 0 draws continuous values rounded
    /// to three decimals, otherwise values snap to this many grid points.
    std::size_t buckets = 0;
};

struct Params {
    std::shared_ptr<const Schema> schema;
    std::size_t dcs = 1;
    std::size_t keys = 100;
    std::size_t writes = 0;
    std::size_t queries = 0;
    Tick duration = 1000;
    Distribution key_distribution;
    std::map<std::string, Distribution> attributes;
    double delete_fraction = 0.0;
    std::vector<double> dc_weights;
    std::vector<std::pair<StalenessLevel, double>> levels;
    int query_depth = 2;
};

/// Throws jsonio::ValidationError.
Params parse_params(const jsonio::Document& doc, const std::string& base_dir = ".");

/// Deterministic for (params, seed); returns {"seed": ..., "actions": [...]}.
scenario::json generate(const Params& p, std::uint64_t seed);

}  // namespace geoidx::workload
