#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rtr/tensor.hpp"
#include "rtr/tr_cores.hpp"

namespace rtr {

struct NoiseSpec {
    enum class Kind { None, Gmm, SaltPepper };

    Kind kind = Kind::None;
    /// Mixture: pi N(0, v1) + (1 - pi) N(0, v2); v1, v2 are variances.
    double pi = 0.8;
    double v1 = 1e-3;
    double v2 = 0.5;
    /// Salt-and-pepper: each entry replaced with probability p by low or high (equal odds).
    double p = 0.2;
    double low = 0.0;
    double high = 1.0;
    std::uint64_t seed = 0;

    void validate() const;

    /// "none", "gmm" / "gmm:0.8,1e-3,0.5", "sp" / "sp:0.2".
    static NoiseSpec parse(const std::string& text);
    std::string to_string() const;

    bool operator==(const NoiseSpec&) const = default;
};

struct SynthInstance {
    /// Tensor rescaled to [0, 1].
    DenseTensor tensor;
    /// Cores that reproduce `tensor` exactly.
    TRCores cores;
    /// tensor = scale * raw + offset
    double scale = 1.0;
    double offset = 0.0;
};

/**
 * Random TR tensor with the given ranks, min-max rescaled to [0, 1].
 *
 * When every rank is >= 2 the cores are built block-diagonally from a random
 * ring of ranks r_k - 1 plus a constant rank-1 ring, so the affine rescale is
 * absorbed exactly and the returned cores keep the requested ranks. Otherwise
 * the cores are drawn with positive entries and only a scale is applied
 * (min > 0 then).
 */
SynthInstance synth_tr_tensor(const Shape& shape, const std::vector<std::size_t>& ranks,
                              std::uint64_t seed);

DenseTensor add_gmm_noise(const DenseTensor& x, const NoiseSpec& spec);
DenseTensor add_salt_pepper(const DenseTensor& x, const NoiseSpec& spec);

/// Applies `spec` to the entries selected by `where` (all entries when empty).
DenseTensor add_noise(const DenseTensor& x, const NoiseSpec& spec,
                      const std::optional<ObservationMask>& where = std::nullopt);

/// Exactly floor(rate * size) observed entries, chosen uniformly without replacement.
ObservationMask random_mask(const Shape& shape, double rate, std::uint64_t seed);

inline constexpr double kPsnrCap = 99.0;

struct Psnr {
    double db = 0.0;
    /// MSE was exactly zero; db holds kPsnrCap.
    bool exact = false;
};

/// 10 log10(peak^2 / MSE) over all entries, or over `subset` when given.
Psnr psnr(const DenseTensor& truth, const DenseTensor& estimate, double peak = 1.0,
          const std::optional<ObservationMask>& subset = std::nullopt);

/// ||a - b|| / ||a||, optionally restricted to `subset`.
double relative_error(const DenseTensor& truth, const DenseTensor& estimate,
                      const std::optional<ObservationMask>& subset = std::nullopt);

}  // namespace rtr
