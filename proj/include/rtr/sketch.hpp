#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rtr/solver.hpp"

namespace rtr {

/**
 * Per-mode index sets for one sketched block update. The active mode keeps
 * every index; the other modes hold sorted, distinct, uniformly drawn indices.
 */
struct SketchPlan {
    std::vector<std::vector<std::size_t>> indices;
    std::size_t active = 0;

    /// s_1..s_N
    Shape sizes() const;
    /// True when every index set is complete for `shape`.
    bool full(const Shape& shape) const;
};

/// s = min(dim, ceil(J^{1/(order-1)})), with an exact integer root.
std::size_t sketch_sample_size(std::size_t dim, std::size_t sample_param, std::size_t order);

SketchPlan make_sketch_plan(const Shape& shape, std::size_t active, std::size_t sample_param,
                            std::uint64_t seed);

/// Seed for the plan drawn at (iteration, block) of a run seeded with `seed`.
std::uint64_t sketch_seed(std::uint64_t seed, std::size_t iteration, std::size_t block);

DenseTensor sample_subtensor(const DenseTensor& x, const SketchPlan& plan);
ObservationMask sample_subtensor(const ObservationMask& p, const SketchPlan& plan);

/// Lateral slices (Z_k)_{I_k} of every core; ranks are unchanged.
TRCores sample_cores(const TRCores& cores, const SketchPlan& plan);

/// gradient_block evaluated on a gathered sketch. The active mode must be complete.
Matrix sampled_gradient(const DenseTensor& xs, const ObservationMask& ps, const DenseTensor& ws,
                        const TRCores& sampled, std::size_t k);

enum class Variant {
    Sawrtrd,             // sketched gradient, Gram of the full cores
    UnscaledGradient,    // sketched gradient, no preconditioner
    LocalScaledTerm,     // Gram of the sampled cores
    UniformRowSampling,  // rows of Z^{!=k}_[2] drawn uniformly, same count as the sketch
};

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

/// Scalable solver: sketched gradients, full-core FGMC preconditioner.
SolveResult sawrtrd(const DenseTensor& x, const ObservationMask& p, const SolverConfig& config,
                    const SolveHooks& hooks = {});

SolveResult ablation_variant(const DenseTensor& x, const ObservationMask& p,
                             const SolverConfig& config, Variant variant,
                             const SolveHooks& hooks = {});

}  // namespace rtr
