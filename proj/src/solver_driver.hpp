#pragma once

// Shared machinery of the full-data and sketched solvers. Both feed the same
// block update, which is what makes a full-plan sketch reproduce the
// full-data trajectory bit for bit.

#include <functional>

#include "rtr/solver.hpp"

namespace rtr::detail {

struct BlockData {
    const Matrix& xk;
    const Matrix& pk;
    const Matrix& m;
    /// Null selects the unscaled (plain steepest descent) direction.
    const Matrix* gram;
};

struct BlockOutcome {
    double sigma = 0.0;
    double eta = 0.0;
    bool updated = false;
};

/// One auto-weighted scaled-steepest-descent step on `core` (updated in place).
BlockOutcome update_block(DenseTensor& core, const BlockData& data, const SolverConfig& config);

/// scaled_gradient with the lambda floor raised x10 on failure, at most three times.
Matrix scaled_gradient_with_floor(const Matrix& d, const Matrix& gram, double lambda);

/// Performs block k of sweep t: must update cores.core(k), refresh cache entry k,
/// and append to rec.steps / rec.sample_sizes. Returns the kernel width used.
using BlockStep = std::function<double(std::size_t t, std::size_t k, TRCores& cores,
                                       GramCache& cache, IterationRecord& rec)>;

SolveResult run_sweeps(const DenseTensor& x, const ObservationMask& p, const SolverConfig& config,
                       const SolveHooks& hooks, const BlockStep& step);

void validate_problem(const DenseTensor& x, const ObservationMask& p, const SolverConfig& config);

}  // namespace rtr::detail
