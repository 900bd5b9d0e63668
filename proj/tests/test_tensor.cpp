#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "rtr/tensor.hpp"

using namespace rtr;

namespace {

DenseTensor iota_tensor(const Shape& shape) {
    std::vector<double> v(num_elements(shape));
    std::iota(v.begin(), v.end(), 1.0);
    return DenseTensor(shape, std::move(v));
}

const std::vector<Shape> kShapes = {
    {2, 2}, {3, 1}, {2, 3, 4}, {4, 1, 3}, {2, 3, 2, 2}, {3, 2, 1, 2, 2}, {1, 1, 5},
};

}  // namespace

TEST(DenseTensor, RejectsBadShapes) {
    EXPECT_THROW(DenseTensor(Shape{4}), ShapeError);
    EXPECT_THROW(DenseTensor(Shape{2, 0, 3}), ShapeError);
    EXPECT_THROW(DenseTensor(Shape{2, 2}, std::vector<double>(3)), ShapeError);
}

TEST(DenseTensor, LinearLayoutIsModeOneFastest) {
    const DenseTensor x = iota_tensor({2, 3, 4});
    const std::vector<std::size_t> idx{1, 2, 3};
    EXPECT_EQ(x.linear_index(idx), 1u + 2u * 2u + 3u * 6u);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x.linear_index(x.multi_index(i)), i);
    const std::vector<std::size_t> bad{2, 0, 0};
    EXPECT_THROW(x.linear_index(bad), ShapeError);
}

TEST(Unfold, ClassicalMatchesEnumeration) {
    const DenseTensor x = iota_tensor({2, 2, 2});
    const Matrix m = unfold_classical(x, 1);
    EXPECT_EQ(m, oracle::unfold_classical(x, 1));
    // columns ordered (i_1, i_3) with i_1 fastest
    Matrix expected(2, 4);
    expected << 1, 2, 5, 6, 3, 4, 7, 8;
    EXPECT_EQ(m, expected);
    for (const auto& shape : kShapes) {
        const DenseTensor r = oracle::random_tensor(shape, 3);
        for (std::size_t n = 0; n < shape.size(); ++n) EXPECT_EQ(unfold_classical(r, n), oracle::unfold_classical(r, n));
    }
}

TEST(Unfold, ShiftedMatchesEnumeration) {
    for (const auto& shape : kShapes) {
        const DenseTensor r = oracle::random_tensor(shape, 5);
        for (std::size_t n = 0; n < shape.size(); ++n) EXPECT_EQ(unfold_shifted(r, n), oracle::unfold_shifted(r, n));
    }
    // (2,3,4), mode 2: columns (i_3, i_1) with i_3 fastest
    const DenseTensor x = iota_tensor({2, 3, 4});
    const Matrix m = unfold_shifted(x, 1);
    ASSERT_EQ(m.rows(), 3);
    ASSERT_EQ(m.cols(), 8);
    EXPECT_EQ(m(2, 5), x[1 + 2 * 2 + 6 * 1]);
}

TEST(Unfold, FirstModeConventionsCoincide) {
    for (const auto& shape : kShapes) {
        const DenseTensor r = oracle::random_tensor(shape, 7);
        EXPECT_EQ(unfold_classical(r, 0), unfold_shifted(r, 0));
    }
}

TEST(Unfold, FoldRoundTripsExactly) {
    for (const auto& shape : kShapes) {
        const DenseTensor r = oracle::random_tensor(shape, 11);
        for (std::size_t n = 0; n < shape.size(); ++n) {
            EXPECT_EQ(fold_shifted(unfold_shifted(r, n), n, shape), r);
            EXPECT_EQ(fold_classical(unfold_classical(r, n), n, shape), r);
        }
    }
}

TEST(Unfold, DegenerateModes) {
    const DenseTensor x = oracle::random_tensor({5, 1, 1}, 2);
    const Matrix m = unfold_classical(x, 0);
    ASSERT_EQ(m.rows(), 5);
    ASSERT_EQ(m.cols(), 1);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(m(static_cast<Eigen::Index>(i), 0), x[i]);
}

TEST(Unfold, TwoWayShiftedIsTranspose) {
    const DenseTensor x = oracle::random_tensor({2, 2}, 4);
    EXPECT_EQ(unfold_shifted(x, 1), unfold_classical(x, 0).transpose());
    EXPECT_EQ(fold_shifted(Matrix::Zero(2, 2), 1, {2, 2}), DenseTensor(Shape{2, 2}));
}

TEST(Unfold, ModeOutOfRangeAndBadFold) {
    const DenseTensor x = oracle::random_tensor({2, 3}, 1);
    EXPECT_THROW(unfold_classical(x, 2), ShapeError);
    EXPECT_THROW(unfold_shifted(x, 5), ShapeError);
    EXPECT_THROW(fold_shifted(Matrix::Zero(3, 3), 0, {2, 3}), ShapeError);
}

TEST(Unfold, PreservesNorm) {
    const DenseTensor x = oracle::random_tensor({3, 4, 2, 2}, 8);
    for (std::size_t n = 0; n < 4; ++n) {
        EXPECT_NEAR(frobenius_norm(unfold_shifted(x, n)), frobenius_norm(x), 1e-12);
        EXPECT_NEAR(frobenius_norm(unfold_classical(x, n)), frobenius_norm(x), 1e-12);
    }
}

TEST(MaskedResidual, Basics) {
    const Shape s{3, 4, 2};
    const DenseTensor x = oracle::random_tensor(s, 1);
    const DenseTensor r = oracle::random_tensor(s, 2);
    EXPECT_EQ(masked_weighted_residual(x, x, ObservationMask(s)), DenseTensor(s));
    EXPECT_EQ(masked_weighted_residual(x, r, ObservationMask(s, false)), DenseTensor(s));
    EXPECT_EQ(masked_weighted_residual(x, r, ObservationMask(s)), x - r);
    EXPECT_THROW(masked_weighted_residual(x, DenseTensor(Shape{3, 4}), ObservationMask(s)), ShapeError);
}

TEST(MaskedResidual, ZeroOnUnobservedForAnyWeights) {
    const Shape s{4, 3, 3};
    const DenseTensor x = oracle::random_tensor(s, 3);
    const DenseTensor r = oracle::random_tensor(s, 4);
    const DenseTensor w = oracle::random_tensor(s, 5, 0.0, 2.0);
    const ObservationMask p = oracle::random_bits(s, 0.4, 6);
    const DenseTensor e = masked_weighted_residual(x, r, p, w);
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (p.observed(i)) {
            EXPECT_DOUBLE_EQ(e[i], std::sqrt(w[i]) * (x[i] - r[i]));
        } else {
            EXPECT_EQ(e[i], 0.0);
        }
    }
}

TEST(Norm, Values) {
    EXPECT_EQ(frobenius_norm(DenseTensor(Shape{3, 3})), 0.0);
    EXPECT_DOUBLE_EQ(frobenius_norm(DenseTensor(Shape{2, 3}, 1.0)), std::sqrt(6.0));
    const DenseTensor x = oracle::random_tensor({5, 4, 3}, 9);
    double acc = 0.0;
    for (double v : x.values()) acc += v * v;
    EXPECT_NEAR(frobenius_norm(x), std::sqrt(acc), 1e-13);
}

TEST(Mask, CountComplementAndTensor) {
    const ObservationMask p = oracle::random_bits({4, 5}, 0.3, 2);
    const ObservationMask q = p.complement();
    EXPECT_EQ(p.count() + q.count(), 20u);
    const DenseTensor t = p.as_tensor();
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], p.observed(i) ? 1.0 : 0.0);
    const Matrix pk = unfold_shifted(p, 1);
    EXPECT_EQ(pk, unfold_shifted(t, 1));
}
