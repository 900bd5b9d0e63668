#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rtr/tensor.hpp"
#include "rtr/tr_cores.hpp"

namespace rtr {

/// Raised when a Gram computation would exceed its entry budget or reads a stale cache.
class GramError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Default cap on the number of matrix entries a Gram routine may materialize.
inline constexpr std::size_t kDefaultGramBudget = std::size_t{1} << 24;

/**
 * Per-core Kronecker-sum matrix of a core of shape r x I x s:
 *
 *   Q[(a r + a'), (b s + b')] = sum_m Z(a, m, b) Z(a', m, b')
 *
 * i.e. Q = sum_m kron(Z(m), Z(m)) with the first pair index slow. The same
 * convention is used for every core, so consecutive Q's chain directly.
 */
Matrix core_q_matrix(const DenseTensor& core);

/**
 * Q_k for every core of a ring, refreshed one core at a time.
 *
 * Single writer. Readers may call gram_via_chain between refreshes.
 */
class GramCache {
public:
    GramCache() = default;
    explicit GramCache(const TRCores& cores);

    std::size_t order() const noexcept { return q_.size(); }
    const Matrix& q(std::size_t k) const { return q_.at(k); }
    bool dirty(std::size_t k) const { return dirty_.at(k); }
    /// r_k of the core Q_k was built from.
    std::size_t left_rank(std::size_t k) const { return shapes_.at(k)[0]; }

    /// Recompute Q_k from `core`. Throws GramError if the core changed shape.
    void refresh(std::size_t k, const DenseTensor& core);
    void mark_dirty(std::size_t k) { dirty_.at(k) = true; }

private:
    std::vector<Matrix> q_;
    std::vector<Shape> shapes_;
    std::vector<bool> dirty_;
};

/**
 * G_{Z^{!=k}} = (Z^{!=k}_[2])^T Z^{!=k}_[2] from the chain
 * P = Q_{k+1} ... Q_N Q_1 ... Q_{k-1} (left to right), rearranged by
 *
 *   G[a + r_k b, a' + r_k b'] = P[b r_{k+1} + b', a r_k + a'].
 *
 * Never materializes the subchain. Throws GramError when any Q_j (j != k) is
 * dirty or when r_k^2 r_{k+1}^2 exceeds `budget`.
 */
Matrix gram_via_chain(const GramCache& cache, std::size_t k,
                      std::size_t budget = kDefaultGramBudget);

/// Explicit oracle: materializes Z^{!=k}_[2] and multiplies.
Matrix gram_explicit(const TRCores& cores, std::size_t k, std::size_t budget = kDefaultGramBudget);

}  // namespace rtr
