#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "rtr/tensor.hpp"

namespace rtr {

/// Kernel-width rule for the Gaussian correntropy loss.
struct KernelPolicy {
    enum class Mode { Fixed, Adaptive, Infinite };

    Mode mode = Mode::Adaptive;
    double sigma_fixed = 1.0;
    double theta = 1.0;
    double sigma_min = 1e-3;

    static KernelPolicy fixed(double sigma) { return {Mode::Fixed, sigma, 1.0, 1e-3}; }
    static KernelPolicy adaptive(double theta = 1.0, double sigma_min = 1e-3) {
        return {Mode::Adaptive, 1.0, theta, sigma_min};
    }
    static KernelPolicy infinite() { return {Mode::Infinite, 1.0, 1.0, 1e-3}; }

    /// Throws std::invalid_argument on a nonpositive width, multiplier or floor.
    void validate() const;

    /// "fixed:0.1", "adaptive:1", "inf".
    static KernelPolicy parse(const std::string& text);
    std::string to_string() const;

    bool operator==(const KernelPolicy&) const = default;
};

/// Sentinel width meaning "all weights are one".
inline constexpr double kInfiniteSigma = std::numeric_limits<double>::infinity();

/// Sum over observed entries of sigma^2 exp(-e^2 / (2 sigma^2)).
double correntropy_objective(const DenseTensor& residual, const ObservationMask& p, double sigma);

/// exp(-e^2 / (2 sigma^2)); identically 1 for the infinite sentinel.
inline double hq_weight(double e, double sigma) {
    if (sigma == kInfiniteSigma) return 1.0;
    return std::exp(-(e * e) / (2.0 * sigma * sigma));
}

/// Recompute every entry of W from the residual, observed or not.
DenseTensor update_weights(const DenseTensor& w, const DenseTensor& residual,
                           const ObservationMask& p, double sigma);

/// Width for the given observed residuals; kInfiniteSigma for the infinite policy.
double adapt_kernel_width(const DenseTensor& residual, const ObservationMask& p,
                          const KernelPolicy& policy);

/// Same rule applied to a mean-square residual already reduced over observed entries.
double kernel_width_from_mean_square(double mean_square, const KernelPolicy& policy);

}  // namespace rtr
