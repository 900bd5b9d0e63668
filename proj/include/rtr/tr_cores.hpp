#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rtr/tensor.hpp"

namespace rtr {

/**
 * Tensor-ring cores Z_1..Z_N, core k of shape r_k x I_k x r_{k+1} with
 * r_{N+1} = r_1. Construction validates ring closure.
 */
class TRCores {
public:
    TRCores() = default;
    explicit TRCores(std::vector<DenseTensor> cores);

    std::size_t order() const noexcept { return cores_.size(); }
    const DenseTensor& core(std::size_t k) const { return cores_.at(k); }

    /// Replace core k; the new core must keep its shape.
    void set_core(std::size_t k, DenseTensor z);

    /// r_1..r_N
    std::vector<std::size_t> ranks() const;
    /// I_1..I_N
    Shape dims() const;

    const std::vector<DenseTensor>& cores() const noexcept { return cores_; }

    bool operator==(const TRCores&) const = default;

private:
    std::vector<DenseTensor> cores_;
};

/// Trace of Z_1(i_1) Z_2(i_2) ... Z_N(i_N).
double tr_entry(const TRCores& cores, std::span<const std::size_t> index);

/// Full tensor represented by the ring.
DenseTensor tr_reconstruct(const TRCores& cores);

/// Core whose lateral slice at (i_a + I_a i_b) is A(i_a) B(i_b).
DenseTensor merge_cores(const DenseTensor& a, const DenseTensor& b);

/**
 * Subchain Z^{!=k}: all cores except k merged in cyclic order k+1..N,1..k-1.
 * Shape r_{k+1} x prod_{j!=k} I_j x r_k, slices ordered with i_{k+1} fastest.
 */
DenseTensor subchain_except(const TRCores& cores, std::size_t k);

/// Z^{<=c}: the first `count` cores merged, shape r_1 x prod I_k x r_{count+1}.
DenseTensor subchain_prefix(const TRCores& cores, std::size_t count);

/// Z^{!=k}_[2] as a (prod_{j!=k} I_j) x (r_k r_{k+1}) matrix.
Matrix subchain_matrix(const TRCores& cores, std::size_t k);

/// Z_(2): I_k x (r_k r_{k+1}) with the r_k index fastest across columns.
Matrix core_unfold_2(const DenseTensor& core);
DenseTensor core_fold_2(const Matrix& m, std::size_t r_left, std::size_t r_right);

/// Cores rotated left by `shift` positions (core shift becomes core 0).
TRCores rotate(const TRCores& cores, std::size_t shift);

namespace detail {

/// C = A * B for column-major views with explicit column strides.
/// Accumulation order is fixed (inner index ascending) so every caller
/// that multiplies the same slices gets bitwise-identical results.
void slice_gemm(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
                std::size_t ldc, std::size_t m, std::size_t n, std::size_t p);

}  // namespace detail

}  // namespace rtr
