#include "rtr/kernels.hpp"
#include "rtr/hq.hpp"

namespace rtr::reference {

Matrix block_residual(const Matrix& xk, const Matrix& z2, const Matrix& m) {
    if (z2.rows() != xk.rows() || m.rows() != xk.cols() || m.cols() != z2.cols()) {
        throw ShapeError("block_residual: operand dimensions differ");
    }
    Matrix e(xk.rows(), xk.cols());
    for (Eigen::Index j = 0; j < xk.cols(); ++j) {
        for (Eigen::Index i = 0; i < xk.rows(); ++i) {
            double pred = 0.0;
            for (Eigen::Index l = 0; l < z2.cols(); ++l) pred += z2(i, l) * m(j, l);
            e(i, j) = xk(i, j) - pred;
        }
    }
    return e;
}

MaskedSquares masked_squares(const Matrix& e, const Matrix& pk) {
    MaskedSquares acc;
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
        for (Eigen::Index i = 0; i < e.rows(); ++i) {
            if (pk(i, j) == 0.0) continue;
            acc.sum += e(i, j) * e(i, j);
            ++acc.count;
        }
    }
    return acc;
}

void weighted_gradient(const Matrix& e, const Matrix& pk, const Matrix& m, double sigma,
                       Matrix& omega, Matrix& d) {
    omega = Matrix::Zero(e.rows(), e.cols());
    d = Matrix::Zero(e.rows(), m.cols());
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
        for (Eigen::Index i = 0; i < e.rows(); ++i) {
            if (pk(i, j) == 0.0) continue;
            const double w = hq_weight(e(i, j), sigma);
            omega(i, j) = w;
            for (Eigen::Index l = 0; l < m.cols(); ++l) d(i, l) += w * e(i, j) * m(j, l);
        }
    }
}

double weighted_quadratic(const Matrix& omega, const Matrix& h, const Matrix& m) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < omega.cols(); ++j) {
        for (Eigen::Index i = 0; i < omega.rows(); ++i) {
            if (omega(i, j) == 0.0) continue;
            double v = 0.0;
            for (Eigen::Index l = 0; l < h.cols(); ++l) v += h(i, l) * m(j, l);
            acc += omega(i, j) * v * v;
        }
    }
    return acc;
}

}  // namespace rtr::reference
