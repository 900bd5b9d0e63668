#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "rtr/data.hpp"
#include "rtr/hq.hpp"
#include "rtr/solver.hpp"

namespace rtr {

/**
 * Everything needed to reproduce one CLI run; written as config.json next to
 * the outputs. Kernel and noise are nested objects:
 *   "kernel": {"mode": "fixed|adaptive|inf", "sigma", "theta", "sigma_min"}
 *   "noise":  {"kind": "none|gmm|sp", "pi", "v1", "v2", "p", "low", "high", "seed"}
 */
struct RunConfig {
    std::string command;
    std::vector<std::size_t> shape;
    std::vector<std::size_t> ranks;
    std::string solver = "sawrtrd";
    std::string variant = "sawrtrd";
    std::size_t sample_param = 30000;
    KernelPolicy kernel = KernelPolicy::adaptive();
    double lambda = 1e-10;
    std::size_t max_iter = 30;
    double tol = 1e-3;
    std::uint64_t seed = 0;
    double init_scale = 1.0;
    double rate = 1.0;
    NoiseSpec noise;
    std::string input;
    std::vector<std::string> images;
    std::string mask;
    std::string truth;
    std::string output;
    std::string metrics;

    nlohmann::json to_json() const;
    /// Missing keys keep their defaults. Throws std::invalid_argument on unknown keys or bad values.
    static RunConfig from_json(const nlohmann::json& j);

    SolverConfig solver_config() const;

    bool operator==(const RunConfig&) const = default;
};

nlohmann::json kernel_to_json(const KernelPolicy& k);
KernelPolicy kernel_from_json(const nlohmann::json& j);
nlohmann::json noise_to_json(const NoiseSpec& n);
NoiseSpec noise_from_json(const nlohmann::json& j);

}  // namespace rtr
