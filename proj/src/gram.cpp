#include "rtr/gram.hpp"

#include <string>

namespace rtr {

Matrix core_q_matrix(const DenseTensor& core) {
    if (core.order() != 3) throw ShapeError("core_q_matrix: core must be 3-way");
    const std::size_t r = core.dim(0);
    const std::size_t n = core.dim(1);
    const std::size_t s = core.dim(2);
    Matrix q = Matrix::Zero(r * r, s * s);
    for (std::size_t b = 0; b < s; ++b) {
        for (std::size_t bp = 0; bp < s; ++bp) {
            const std::size_t col = b * s + bp;
            for (std::size_t m = 0; m < n; ++m) {
                const double* zb = core.data() + r * (m + n * b);
                const double* zbp = core.data() + r * (m + n * bp);
                for (std::size_t a = 0; a < r; ++a) {
                    const double za = zb[a];
                    for (std::size_t ap = 0; ap < r; ++ap) q(a * r + ap, col) += za * zbp[ap];
                }
            }
        }
    }
    return q;
}

GramCache::GramCache(const TRCores& cores) {
    const std::size_t n = cores.order();
    q_.resize(n);
    shapes_.resize(n);
    dirty_.assign(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        q_[k] = core_q_matrix(cores.core(k));
        shapes_[k] = cores.core(k).shape();
    }
}

void GramCache::refresh(std::size_t k, const DenseTensor& core) {
    if (core.shape() != shapes_.at(k)) {
        throw GramError("GramCache::refresh: core " + std::to_string(k) +
                        " changed shape; rebuild the cache");
    }
    q_[k] = core_q_matrix(core);
    dirty_[k] = false;
}

Matrix gram_via_chain(const GramCache& cache, std::size_t k, std::size_t budget) {
    const std::size_t n = cache.order();
    if (k >= n) throw ShapeError("gram_via_chain: mode out of range");
    for (std::size_t j = 0; j < n; ++j) {
        if (j != k && cache.dirty(j)) {
            throw GramError("gram_via_chain: Q_" + std::to_string(j) + " is stale");
        }
    }
    const std::size_t rk = cache.left_rank(k);
    const std::size_t rn = cache.left_rank((k + 1) % n);
    if (rk * rk * rn * rn > budget) {
        throw GramError("gram_via_chain: Gram of size " + std::to_string(rk * rk * rn * rn) +
                        " entries exceeds budget " + std::to_string(budget));
    }

    Matrix p = cache.q((k + 1) % n);
    for (std::size_t step = 2; step < n; ++step) {
        Matrix next = p * cache.q((k + step) % n);
        p.swap(next);
    }

    Matrix g(rk * rn, rk * rn);
    for (std::size_t bp = 0; bp < rn; ++bp)
        for (std::size_t ap = 0; ap < rk; ++ap)
            for (std::size_t b = 0; b < rn; ++b)
                for (std::size_t a = 0; a < rk; ++a)
                    g(a + rk * b, ap + rk * bp) = p(b * rn + bp, a * rk + ap);
    return g;
}

Matrix gram_explicit(const TRCores& cores, std::size_t k, std::size_t budget) {
    const std::size_t n = cores.order();
    if (k >= n) throw ShapeError("gram_explicit: mode out of range");
    std::size_t rows = 1;
    for (std::size_t j = 0; j < n; ++j)
        if (j != k) rows *= cores.core(j).dim(1);
    const std::size_t cols = cores.core(k).dim(0) * cores.core(k).dim(2);
    if (rows * cols > budget) {
        throw GramError("gram_explicit: subchain unfolding of " + std::to_string(rows) + " x " +
                        std::to_string(cols) + " exceeds budget " + std::to_string(budget));
    }
    const Matrix m = subchain_matrix(cores, k);
    return m.transpose() * m;
}

}  // namespace rtr
