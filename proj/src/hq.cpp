#include "rtr/hq.hpp"

#include <cmath>
#include <stdexcept>

namespace rtr {

void KernelPolicy::validate() const {
    if (mode == Mode::Fixed && !(sigma_fixed > 0.0)) {
        throw std::invalid_argument("kernel width must be positive");
    }
    if (mode == Mode::Adaptive && !(theta > 0.0)) {
        throw std::invalid_argument("adaptive kernel multiplier must be positive");
    }
    if (!(sigma_min > 0.0)) throw std::invalid_argument("kernel width floor must be positive");
}

KernelPolicy KernelPolicy::parse(const std::string& text) {
    if (text == "inf" || text == "infinite") return infinite();
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    if (colon == std::string::npos) {
        if (kind == "adaptive") return adaptive();
        throw std::invalid_argument("kernel spec '" + text + "' needs a value, e.g. fixed:0.1");
    }
    double value = 0.0;
    try {
        value = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw std::invalid_argument("kernel spec '" + text + "' has a non-numeric value");
    }
    KernelPolicy p;
    if (kind == "fixed") {
        p = fixed(value);
    } else if (kind == "adaptive") {
        p = adaptive(value);
    } else {
        throw std::invalid_argument("unknown kernel mode '" + kind + "'");
    }
    p.validate();
    return p;
}

std::string KernelPolicy::to_string() const {
    switch (mode) {
    case Mode::Fixed: return "fixed:" + std::to_string(sigma_fixed);
    case Mode::Adaptive: return "adaptive:" + std::to_string(theta);
    case Mode::Infinite: return "inf";
    }
    return "inf";
}

double correntropy_objective(const DenseTensor& residual, const ObservationMask& p, double sigma) {
    require_same_shape(residual.shape(), p.shape(), "correntropy_objective");
    if (!(sigma > 0.0) || std::isinf(sigma)) {
        throw std::invalid_argument("correntropy_objective: sigma must be positive and finite");
    }
    const double s2 = sigma * sigma;
    double acc = 0.0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
        if (p.observed(i)) acc += s2 * std::exp(-(residual[i] * residual[i]) / (2.0 * s2));
    }
    return acc;
}

DenseTensor update_weights(const DenseTensor& w, const DenseTensor& residual,
                           const ObservationMask& p, double sigma) {
    require_same_shape(w.shape(), residual.shape(), "update_weights");
    require_same_shape(w.shape(), p.shape(), "update_weights");
    DenseTensor out(w.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = hq_weight(residual[i], sigma);
    return out;
}

double kernel_width_from_mean_square(double mean_square, const KernelPolicy& policy) {
    switch (policy.mode) {
    case KernelPolicy::Mode::Fixed: return policy.sigma_fixed;
    case KernelPolicy::Mode::Infinite: return kInfiniteSigma;
    case KernelPolicy::Mode::Adaptive:
        return std::max(policy.sigma_min, policy.theta * std::sqrt(mean_square));
    }
    return kInfiniteSigma;
}

double adapt_kernel_width(const DenseTensor& residual, const ObservationMask& p,
                          const KernelPolicy& policy) {
    require_same_shape(residual.shape(), p.shape(), "adapt_kernel_width");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
        if (!p.observed(i)) continue;
        acc += residual[i] * residual[i];
        ++count;
    }
    if (count == 0) throw std::invalid_argument("adapt_kernel_width: no observed entries");
    return kernel_width_from_mean_square(acc / static_cast<double>(count), policy);
}

}  // namespace rtr
