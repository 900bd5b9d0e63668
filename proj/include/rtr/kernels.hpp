#pragma once

#include <cstddef>

#include "rtr/tensor.hpp"

// Inner loops of one block update, expressed on shifted unfoldings:
//   xk, pk : I_k x J   data and 0/1 mask, X_[k] and P_[k]
//   z2     : I_k x R   core unfolding Z_k(2), R = r_k r_{k+1}
//   m      : J x R     subchain unfolding Z^{!=k}_[2]
//
// rtr::kernels is the OpenMP version used by the solvers. Columns are split
// into fixed chunks of kChunk and partial reductions are summed in chunk
// order, so results do not depend on the thread count. rtr::reference holds
// plain serial loops with the same contracts, kept for testing and benchmarks.

namespace rtr {

struct MaskedSquares {
    double sum = 0.0;
    std::size_t count = 0;
};

namespace kernels {

inline constexpr std::size_t kChunk = 256;

/// E = X_[k] - Z_k(2) M^T
Matrix block_residual(const Matrix& xk, const Matrix& z2, const Matrix& m);

/// Sum of E^2 and number of entries over observed positions.
MaskedSquares masked_squares(const Matrix& e, const Matrix& pk);

/// omega = P o exp(-E^2 / 2 sigma^2), d = (omega o E) M.
void weighted_gradient(const Matrix& e, const Matrix& pk, const Matrix& m, double sigma,
                       Matrix& omega, Matrix& d);

/// || sqrt(omega) o (h M^T) ||_F^2
double weighted_quadratic(const Matrix& omega, const Matrix& h, const Matrix& m);

}  // namespace kernels

namespace reference {

Matrix block_residual(const Matrix& xk, const Matrix& z2, const Matrix& m);
MaskedSquares masked_squares(const Matrix& e, const Matrix& pk);
void weighted_gradient(const Matrix& e, const Matrix& pk, const Matrix& m, double sigma,
                       Matrix& omega, Matrix& d);
double weighted_quadratic(const Matrix& omega, const Matrix& h, const Matrix& m);

}  // namespace reference

}  // namespace rtr
