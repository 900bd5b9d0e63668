#include "rtr/kernels.hpp"

#include <algorithm>
#include <vector>

#include "rtr/hq.hpp"

namespace rtr::kernels {

namespace {

struct Chunking {
    std::size_t total;
    std::size_t count;

    explicit Chunking(std::size_t cols) : total(cols), count((cols + kChunk - 1) / kChunk) {}
    Eigen::Index begin(std::size_t c) const { return static_cast<Eigen::Index>(c * kChunk); }
    Eigen::Index length(std::size_t c) const {
        return static_cast<Eigen::Index>(std::min(kChunk, total - c * kChunk));
    }
};

void check_block(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(what) + ": operand dimensions differ");
    }
}

}  // namespace

Matrix block_residual(const Matrix& xk, const Matrix& z2, const Matrix& m) {
    if (z2.rows() != xk.rows() || m.rows() != xk.cols() || m.cols() != z2.cols()) {
        throw ShapeError("block_residual: operand dimensions differ");
    }
    Matrix e(xk.rows(), xk.cols());
    const Chunking ch(static_cast<std::size_t>(xk.cols()));
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < ch.count; ++c) {
        const auto b = ch.begin(c);
        const auto len = ch.length(c);
        e.middleCols(b, len).noalias() = xk.middleCols(b, len);
        e.middleCols(b, len).noalias() -= z2 * m.middleRows(b, len).transpose();
    }
    return e;
}

MaskedSquares masked_squares(const Matrix& e, const Matrix& pk) {
    check_block(e, pk, "masked_squares");
    const Chunking ch(static_cast<std::size_t>(e.cols()));
    std::vector<MaskedSquares> part(ch.count);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < ch.count; ++c) {
        MaskedSquares acc;
        const auto b = ch.begin(c);
        const auto len = ch.length(c);
        for (Eigen::Index j = b; j < b + len; ++j) {
            for (Eigen::Index i = 0; i < e.rows(); ++i) {
                if (pk(i, j) != 0.0) {
                    acc.sum += e(i, j) * e(i, j);
                    ++acc.count;
                }
            }
        }
        part[c] = acc;
    }
    MaskedSquares total;
    for (const auto& p : part) {
        total.sum += p.sum;
        total.count += p.count;
    }
    return total;
}

void weighted_gradient(const Matrix& e, const Matrix& pk, const Matrix& m, double sigma,
                       Matrix& omega, Matrix& d) {
    check_block(e, pk, "weighted_gradient");
    if (m.rows() != e.cols()) throw ShapeError("weighted_gradient: subchain rows differ");
    const Chunking ch(static_cast<std::size_t>(e.cols()));
    omega.resize(e.rows(), e.cols());
    std::vector<Matrix> part(ch.count);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < ch.count; ++c) {
        const auto b = ch.begin(c);
        const auto len = ch.length(c);
        Matrix r(e.rows(), len);
        for (Eigen::Index j = 0; j < len; ++j) {
            for (Eigen::Index i = 0; i < e.rows(); ++i) {
                const double w = pk(i, b + j) != 0.0 ? hq_weight(e(i, b + j), sigma) : 0.0;
                omega(i, b + j) = w;
                r(i, j) = w * e(i, b + j);
            }
        }
        part[c].noalias() = r * m.middleRows(b, len);
    }
    d = Matrix::Zero(e.rows(), m.cols());
    for (const auto& p : part) d += p;
}

double weighted_quadratic(const Matrix& omega, const Matrix& h, const Matrix& m) {
    if (m.rows() != omega.cols() || h.rows() != omega.rows() || h.cols() != m.cols()) {
        throw ShapeError("weighted_quadratic: operand dimensions differ");
    }
    const Chunking ch(static_cast<std::size_t>(omega.cols()));
    std::vector<double> part(ch.count, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < ch.count; ++c) {
        const auto b = ch.begin(c);
        const auto len = ch.length(c);
        const Matrix v = h * m.middleRows(b, len).transpose();
        part[c] = (omega.middleCols(b, len).array() * v.array().square()).sum();
    }
    double total = 0.0;
    for (double p : part) total += p;
    return total;
}

}  // namespace rtr::kernels
