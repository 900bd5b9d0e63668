#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rtr/gram.hpp"
#include "rtr/hq.hpp"
#include "rtr/tensor.hpp"
#include "rtr/tr_cores.hpp"

namespace rtr {

/// Raised for non-finite iterates or an unrecoverable preconditioner solve.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    std::vector<std::size_t> ranks;
    double lambda = 1e-10;
    KernelPolicy kernel = KernelPolicy::adaptive();
    std::size_t max_iter = 30;
    double tol = 1e-3;
    std::uint64_t seed = 0;
    double init_scale = 1.0;
    /// Sample parameter J, used by the sketched solvers only.
    std::size_t sample_param = 30000;
    /// Evaluate the full objective after every sweep (costs one reconstruction).
    bool record_objective = true;
    std::size_t gram_budget = kDefaultGramBudget;
    /// Start from these cores instead of a random draw.
    std::optional<TRCores> initial;

    /// Throws std::invalid_argument when a field is out of range for an order-`order` tensor.
    void validate(std::size_t order) const;
};

struct IterationRecord {
    std::size_t iteration = 0;
    /// Correntropy objective at the sweep's kernel width (NaN for the infinite width).
    double objective = std::numeric_limits<double>::quiet_NaN();
    /// || sqrt(W) o P o (X - R) ||_F with W at the same width.
    double residual = std::numeric_limits<double>::quiet_NaN();
    double sigma = 0.0;
    std::vector<double> steps;
    double stop_metric = 0.0;
    double millis = 0.0;
    /// Sketch sizes (s_1..s_N) per block; empty for the full-data solver.
    std::vector<Shape> sample_sizes;
    /// Filled in by observers that know the ground truth.
    double psnr = std::numeric_limits<double>::quiet_NaN();
};

struct SolverTrace {
    double initial_objective = std::numeric_limits<double>::quiet_NaN();
    std::vector<IterationRecord> iterations;
    bool converged = false;
};

struct SolveResult {
    TRCores cores;
    SolverTrace trace;
};

/// State visible to a block hook just before core `block` is updated.
struct BlockInfo {
    std::size_t iteration;
    std::size_t block;
    const TRCores& cores;
    /// Preconditioner Gram used for this block; null for the unscaled arm.
    const Matrix* gram;
};

struct SolveHooks {
    std::function<void(const TRCores&, IterationRecord&)> on_iteration;
    std::function<void(const BlockInfo&)> on_block;
};

/// Gaussian cores with std init_scale / sqrt(r_k r_{k+1}); deterministic in `seed`.
TRCores init_cores(const Shape& shape, const std::vector<std::size_t>& ranks, std::uint64_t seed,
                   double init_scale = 1.0);

/**
 * d(Z_k(2)) = (W_[k] o P_[k] o (X_[k] - Z_k(2) M^T)) M with M = Z^{!=k}_[2].
 * This is the negative gradient of 1/2 || sqrt(W) o P o (X - R) ||^2, so the
 * descent update adds a positive multiple of it (or of its scaled form).
 */
Matrix gradient_block(const DenseTensor& x, const ObservationMask& p, const DenseTensor& w,
                      const TRCores& cores, std::size_t k);

/// h = d (G + lambda I)^{-1} through a Cholesky solve. Throws SolverError if G + lambda I is not SPD.
Matrix scaled_gradient(const Matrix& d, const Matrix& gram, double lambda);

/**
 * Exact minimizer along h of the weighted quadratic:
 *   eta = <d, h> / || sqrt(W_[k]) o P_[k] o (h M^T) ||^2.
 * Empty when d = 0 or the direction is invisible under the mask.
 */
std::optional<double> line_search_step(const Matrix& d, const Matrix& h, const Matrix& wk,
                                       const Matrix& pk, const Matrix& m);

/// Full-data auto-weighted robust TR decomposition / completion.
SolveResult awrtrd(const DenseTensor& x, const ObservationMask& p, const SolverConfig& config,
                   const SolveHooks& hooks = {});

/// awrtrd with all weights fixed at one.
SolveResult unweighted_solve(const DenseTensor& x, const ObservationMask& p, SolverConfig config,
                             const SolveHooks& hooks = {});

/// D = Z_N(2) G_{Z^{!=N}} Z_N(2)^T, the matrix the stop metric compares between sweeps.
Matrix stop_matrix(const TRCores& cores, const GramCache& cache);

/// Relative change ||D - D_prev|| / ||D||.
double relative_change(const Matrix& d, const Matrix& d_prev);

}  // namespace rtr
