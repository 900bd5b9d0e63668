#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rtr {

using Matrix = Eigen::MatrixXd;
using Shape = std::vector<std::size_t>;

/// Raised when operands disagree in shape or an index is out of range.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::size_t num_elements(const Shape& shape);
std::string shape_string(const Shape& shape);

/**
 * Dense N-way array of doubles.
 *
 * Linear layout is mode-1 fastest: entry (i_1, ..., i_N) lives at
 * i_1 + i_2 I_1 + i_3 I_1 I_2 + ...  (0-based). Every unfolding in this
 * library is an explicit index map against this layout.
 */
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape, double fill = 0.0);
    DenseTensor(Shape shape, std::vector<double> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t order() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    double& operator[](std::size_t linear) noexcept { return data_[linear]; }
    double operator[](std::size_t linear) const noexcept { return data_[linear]; }

    std::size_t linear_index(std::span<const std::size_t> index) const;
    double& at(std::span<const std::size_t> index) { return data_[linear_index(index)]; }
    double at(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }

    /// Multi-index of a linear offset.
    std::vector<std::size_t> multi_index(std::size_t linear) const;

    bool operator==(const DenseTensor&) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Binary observation pattern paired with a tensor (true = observed).
class ObservationMask {
public:
    ObservationMask() = default;
    explicit ObservationMask(Shape shape, bool observed = true);
    ObservationMask(Shape shape, std::vector<std::uint8_t> bits);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return bits_.size(); }
    bool observed(std::size_t linear) const noexcept { return bits_[linear] != 0; }
    void set(std::size_t linear, bool value) noexcept { bits_[linear] = value ? 1 : 0; }
    std::size_t count() const noexcept;

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    /// Mask as a 0/1 tensor for use in arithmetic.
    DenseTensor as_tensor() const;
    ObservationMask complement() const;

    bool operator==(const ObservationMask&) const = default;

private:
    Shape shape_;
    std::vector<std::uint8_t> bits_;
};

/**
 * Classical mode-n unfolding X_(n): rows i_n, columns over
 * (i_1..i_{n-1}, i_{n+1}..i_N) with i_1 fastest.
 */
Matrix unfold_classical(const DenseTensor& x, std::size_t mode);
DenseTensor fold_classical(const Matrix& m, std::size_t mode, const Shape& shape);

/**
 * Cyclically shifted mode-n unfolding X_[n]: columns over
 * (i_{n+1}..i_N, i_1..i_{n-1}) with i_{n+1} fastest.
 */
Matrix unfold_shifted(const DenseTensor& x, std::size_t mode);
DenseTensor fold_shifted(const Matrix& m, std::size_t mode, const Shape& shape);

/// Shifted unfolding of the mask as a 0/1 matrix.
Matrix unfold_shifted(const ObservationMask& p, std::size_t mode);

/// sqrt(W) o P o (X - R). Unit weights when `w` is empty.
DenseTensor masked_weighted_residual(const DenseTensor& x, const DenseTensor& r,
                                     const ObservationMask& p,
                                     const std::optional<DenseTensor>& w = std::nullopt);

double frobenius_norm(const DenseTensor& x);
double frobenius_norm(const Matrix& m);

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator+(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator*(double alpha, const DenseTensor& a);

void require_same_shape(const Shape& a, const Shape& b, const char* what);

}  // namespace rtr
