#include "rtr/tr_cores.hpp"

#include <algorithm>

namespace rtr {

namespace detail {

void slice_gemm(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
                std::size_t ldc, std::size_t m, std::size_t n, std::size_t p) {
    for (std::size_t j = 0; j < p; ++j) {
        double* cj = c + j * ldc;
        std::fill(cj, cj + m, 0.0);
        for (std::size_t l = 0; l < n; ++l) {
            const double blj = b[l + j * ldb];
            const double* al = a + l * lda;
            for (std::size_t i = 0; i < m; ++i) cj[i] += al[i] * blj;
        }
    }
}

}  // namespace detail

namespace {

struct CoreDims {
    std::size_t left, mid, right;
};

CoreDims core_dims(const DenseTensor& z) {
    if (z.order() != 3) throw ShapeError("TR core must be 3-way, got " + shape_string(z.shape()));
    return {z.dim(0), z.dim(1), z.dim(2)};
}

}  // namespace

TRCores::TRCores(std::vector<DenseTensor> cores) : cores_(std::move(cores)) {
    const std::size_t n = cores_.size();
    if (n < 2) throw ShapeError("tensor ring needs at least 2 cores");
    for (std::size_t k = 0; k < n; ++k) {
        const auto d = core_dims(cores_[k]);
        const auto next = core_dims(cores_[(k + 1) % n]);
        if (d.right != next.left) {
            throw ShapeError("ring rank mismatch between core " + std::to_string(k) + " " +
                             shape_string(cores_[k].shape()) + " and core " +
                             std::to_string((k + 1) % n) + " " +
                             shape_string(cores_[(k + 1) % n].shape()));
        }
    }
}

void TRCores::set_core(std::size_t k, DenseTensor z) {
    if (z.shape() != cores_.at(k).shape()) {
        throw ShapeError("set_core: core " + std::to_string(k) + " shape change " +
                         shape_string(cores_[k].shape()) + " -> " + shape_string(z.shape()));
    }
    cores_[k] = std::move(z);
}

std::vector<std::size_t> TRCores::ranks() const {
    std::vector<std::size_t> r;
    r.reserve(cores_.size());
    for (const auto& z : cores_) r.push_back(z.dim(0));
    return r;
}

Shape TRCores::dims() const {
    Shape s;
    s.reserve(cores_.size());
    for (const auto& z : cores_) s.push_back(z.dim(1));
    return s;
}

double tr_entry(const TRCores& cores, std::span<const std::size_t> index) {
    const std::size_t n = cores.order();
    if (index.size() != n) throw ShapeError("tr_entry: index arity does not match ring order");
    const auto& z0 = cores.core(0);
    if (index[0] >= z0.dim(1)) throw ShapeError("tr_entry: index out of range");

    std::size_t rows = z0.dim(0);
    std::size_t cols = z0.dim(2);
    std::vector<double> acc(rows * cols);
    for (std::size_t b = 0; b < cols; ++b)
        for (std::size_t a = 0; a < rows; ++a)
            acc[a + rows * b] = z0[a + rows * (index[0] + z0.dim(1) * b)];

    std::vector<double> next;
    for (std::size_t k = 1; k < n; ++k) {
        const auto& z = cores.core(k);
        if (index[k] >= z.dim(1)) throw ShapeError("tr_entry: index out of range");
        const std::size_t out_cols = z.dim(2);
        next.assign(rows * out_cols, 0.0);
        detail::slice_gemm(acc.data(), rows, z.data() + z.dim(0) * index[k], z.dim(0) * z.dim(1),
                           next.data(), rows, rows, cols, out_cols);
        acc.swap(next);
        cols = out_cols;
    }
    double tr = 0.0;
    for (std::size_t a = 0; a < rows; ++a) tr += acc[a + rows * a];
    return tr;
}

DenseTensor merge_cores(const DenseTensor& a, const DenseTensor& b) {
    const auto da = core_dims(a);
    const auto db = core_dims(b);
    if (da.right != db.left) {
        throw ShapeError("merge_cores: inner rank mismatch " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    }
    const std::size_t merged = da.mid * db.mid;
    DenseTensor c({da.left, merged, db.right});
    const std::size_t lda = da.left * da.mid;
    const std::size_t ldb = db.left * db.mid;
    const std::size_t ldc = da.left * merged;
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
#pragma omp parallel for schedule(static)
    for (std::size_t ib = 0; ib < db.mid; ++ib) {
        for (std::size_t ia = 0; ia < da.mid; ++ia) {
            const std::size_t slice = ia + da.mid * ib;
            detail::slice_gemm(pa + da.left * ia, lda, pb + db.left * ib, ldb, pc + da.left * slice,
                               ldc, da.left, da.right, db.right);
        }
    }
    return c;
}

DenseTensor subchain_except(const TRCores& cores, std::size_t k) {
    const std::size_t n = cores.order();
    if (k >= n) throw ShapeError("subchain_except: mode out of range");
    DenseTensor chain = cores.core((k + 1) % n);
    for (std::size_t step = 2; step < n; ++step) chain = merge_cores(chain, cores.core((k + step) % n));
    return chain;
}

DenseTensor subchain_prefix(const TRCores& cores, std::size_t count) {
    if (count < 1 || count > cores.order()) throw ShapeError("subchain_prefix: count out of range");
    DenseTensor chain = cores.core(0);
    for (std::size_t k = 1; k < count; ++k) chain = merge_cores(chain, cores.core(k));
    return chain;
}

Matrix subchain_matrix(const TRCores& cores, std::size_t k) {
    return unfold_shifted(subchain_except(cores, k), 1);
}

DenseTensor tr_reconstruct(const TRCores& cores) {
    const std::size_t last = cores.order() - 1;
    const Matrix m = subchain_matrix(cores, last);
    const Matrix z2 = core_unfold_2(cores.core(last));
    // X_[N] = Z_N(2) M^T and, with i_1 fastest, X's buffer is X_[N]^T column-major.
    Matrix xt = m * z2.transpose();
    return DenseTensor(cores.dims(), std::vector<double>(xt.data(), xt.data() + xt.size()));
}

Matrix core_unfold_2(const DenseTensor& core) {
    const auto d = core_dims(core);
    Matrix m(d.mid, d.left * d.right);
    for (std::size_t b = 0; b < d.right; ++b)
        for (std::size_t i = 0; i < d.mid; ++i)
            for (std::size_t a = 0; a < d.left; ++a)
                m(i, a + d.left * b) = core[a + d.left * (i + d.mid * b)];
    return m;
}

DenseTensor core_fold_2(const Matrix& m, std::size_t r_left, std::size_t r_right) {
    if (static_cast<std::size_t>(m.cols()) != r_left * r_right || m.rows() < 1) {
        throw ShapeError("core_fold_2: matrix columns do not match ranks");
    }
    const std::size_t mid = static_cast<std::size_t>(m.rows());
    DenseTensor core({r_left, mid, r_right});
    for (std::size_t b = 0; b < r_right; ++b)
        for (std::size_t i = 0; i < mid; ++i)
            for (std::size_t a = 0; a < r_left; ++a)
                core[a + r_left * (i + mid * b)] = m(i, a + r_left * b);
    return core;
}

TRCores rotate(const TRCores& cores, std::size_t shift) {
    const std::size_t n = cores.order();
    std::vector<DenseTensor> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(cores.core((k + shift) % n));
    return TRCores(std::move(out));
}

}  // namespace rtr
