#include "rtr/tensor.hpp"

#include <cmath>
#include <sstream>

namespace rtr {

namespace {

void validate_shape(const Shape& shape) {
    if (shape.size() < 2) {
        throw ShapeError("tensor needs at least 2 modes, got " + std::to_string(shape.size()));
    }
    for (auto d : shape) {
        if (d == 0) throw ShapeError("zero-sized mode in shape " + shape_string(shape));
    }
}

void check_mode(const Shape& shape, std::size_t mode) {
    if (mode >= shape.size()) {
        throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                         std::to_string(shape.size()));
    }
}

// Sizes of the mode blocks before and after `mode` in the linear layout.
struct Split {
    std::size_t before = 1;
    std::size_t at = 1;
    std::size_t after = 1;
};

Split split_at(const Shape& shape, std::size_t mode) {
    Split s;
    for (std::size_t j = 0; j < mode; ++j) s.before *= shape[j];
    s.at = shape[mode];
    for (std::size_t j = mode + 1; j < shape.size(); ++j) s.after *= shape[j];
    return s;
}

}  // namespace

std::size_t num_elements(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (a != b) {
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                         shape_string(b));
    }
}

DenseTensor::DenseTensor(Shape shape, double fill) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(num_elements(shape_), fill);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != num_elements(shape_)) {
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
    }
}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) throw ShapeError("index arity does not match tensor order");
    std::size_t lin = 0;
    std::size_t stride = 1;
    for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] >= shape_[k]) throw ShapeError("index out of range");
        lin += index[k] * stride;
        stride *= shape_[k];
    }
    return lin;
}

std::vector<std::size_t> DenseTensor::multi_index(std::size_t linear) const {
    std::vector<std::size_t> idx(shape_.size());
    for (std::size_t k = 0; k < shape_.size(); ++k) {
        idx[k] = linear % shape_[k];
        linear /= shape_[k];
    }
    return idx;
}

ObservationMask::ObservationMask(Shape shape, bool observed) : shape_(std::move(shape)) {
    validate_shape(shape_);
    bits_.assign(num_elements(shape_), observed ? 1 : 0);
}

ObservationMask::ObservationMask(Shape shape, std::vector<std::uint8_t> bits)
    : shape_(std::move(shape)), bits_(std::move(bits)) {
    validate_shape(shape_);
    if (bits_.size() != num_elements(shape_)) throw ShapeError("mask length does not match shape");
    for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t ObservationMask::count() const noexcept {
    std::size_t c = 0;
    for (auto b : bits_) c += b;
    return c;
}

DenseTensor ObservationMask::as_tensor() const {
    DenseTensor t(shape_);
    for (std::size_t i = 0; i < bits_.size(); ++i) t[i] = bits_[i];
    return t;
}

ObservationMask ObservationMask::complement() const {
    ObservationMask c = *this;
    for (auto& b : c.bits_) b = 1 - b;
    return c;
}

// X_(n)(i_n, pre + P*post) = X[pre + P*(i_n + I_n*post)]
Matrix unfold_classical(const DenseTensor& x, std::size_t mode) {
    check_mode(x.shape(), mode);
    const auto s = split_at(x.shape(), mode);
    Matrix m(s.at, s.before * s.after);
    const double* src = x.data();
#pragma omp parallel for schedule(static)
    for (std::size_t post = 0; post < s.after; ++post) {
        for (std::size_t i = 0; i < s.at; ++i) {
            const double* row = src + s.before * (i + s.at * post);
            for (std::size_t pre = 0; pre < s.before; ++pre) {
                m(i, pre + s.before * post) = row[pre];
            }
        }
    }
    return m;
}

DenseTensor fold_classical(const Matrix& m, std::size_t mode, const Shape& shape) {
    check_mode(shape, mode);
    const auto s = split_at(shape, mode);
    if (static_cast<std::size_t>(m.rows()) != s.at ||
        static_cast<std::size_t>(m.cols()) != s.before * s.after) {
        throw ShapeError("fold_classical: matrix dimensions do not match shape " + shape_string(shape));
    }
    DenseTensor x(shape);
    double* dst = x.data();
#pragma omp parallel for schedule(static)
    for (std::size_t post = 0; post < s.after; ++post) {
        for (std::size_t i = 0; i < s.at; ++i) {
            double* row = dst + s.before * (i + s.at * post);
            for (std::size_t pre = 0; pre < s.before; ++pre) row[pre] = m(i, pre + s.before * post);
        }
    }
    return x;
}

// X_[n](i_n, post + Q*pre) = X[pre + P*(i_n + I_n*post)]
Matrix unfold_shifted(const DenseTensor& x, std::size_t mode) {
    check_mode(x.shape(), mode);
    const auto s = split_at(x.shape(), mode);
    Matrix m(s.at, s.before * s.after);
    const double* src = x.data();
#pragma omp parallel for schedule(static)
    for (std::size_t pre = 0; pre < s.before; ++pre) {
        for (std::size_t post = 0; post < s.after; ++post) {
            const std::size_t col = post + s.after * pre;
            for (std::size_t i = 0; i < s.at; ++i) m(i, col) = src[pre + s.before * (i + s.at * post)];
        }
    }
    return m;
}

DenseTensor fold_shifted(const Matrix& m, std::size_t mode, const Shape& shape) {
    check_mode(shape, mode);
    const auto s = split_at(shape, mode);
    if (static_cast<std::size_t>(m.rows()) != s.at ||
        static_cast<std::size_t>(m.cols()) != s.before * s.after) {
        throw ShapeError("fold_shifted: matrix dimensions do not match shape " + shape_string(shape));
    }
    DenseTensor x(shape);
    double* dst = x.data();
#pragma omp parallel for schedule(static)
    for (std::size_t pre = 0; pre < s.before; ++pre) {
        for (std::size_t post = 0; post < s.after; ++post) {
            const std::size_t col = post + s.after * pre;
            for (std::size_t i = 0; i < s.at; ++i) dst[pre + s.before * (i + s.at * post)] = m(i, col);
        }
    }
    return x;
}

Matrix unfold_shifted(const ObservationMask& p, std::size_t mode) {
    return unfold_shifted(p.as_tensor(), mode);
}

DenseTensor masked_weighted_residual(const DenseTensor& x, const DenseTensor& r,
                                     const ObservationMask& p,
                                     const std::optional<DenseTensor>& w) {
    require_same_shape(x.shape(), r.shape(), "masked_weighted_residual");
    require_same_shape(x.shape(), p.shape(), "masked_weighted_residual");
    if (w) require_same_shape(x.shape(), w->shape(), "masked_weighted_residual");
    DenseTensor out(x.shape());
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        if (!p.observed(i)) continue;
        const double scale = w ? std::sqrt((*w)[i]) : 1.0;
        out[i] = scale * (x[i] - r[i]);
    }
    return out;
}

double frobenius_norm(const DenseTensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v * v;
    return std::sqrt(acc);
}

double frobenius_norm(const Matrix& m) { return m.norm(); }

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
    require_same_shape(a.shape(), b.shape(), "operator-");
    DenseTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) {
    require_same_shape(a.shape(), b.shape(), "operator+");
    DenseTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

DenseTensor operator*(double alpha, const DenseTensor& a) {
    DenseTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i];
    return out;
}

}  // namespace rtr
