#include "rtr/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rtr/solver.hpp"

namespace rtr {

void NoiseSpec::validate() const {
    if (!(pi >= 0.0 && pi <= 1.0)) throw std::invalid_argument("GMM weight must lie in [0, 1]");
    if (!(v1 > 0.0 && v2 > 0.0)) throw std::invalid_argument("GMM variances must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("corruption probability must lie in [0, 1]");
}

NoiseSpec NoiseSpec::parse(const std::string& text) {
    NoiseSpec spec;
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    std::vector<double> values;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                values.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw std::invalid_argument("noise spec '" + text + "' has a non-numeric value");
            }
        }
    }
    if (kind == "none") {
        spec.kind = Kind::None;
    } else if (kind == "gmm") {
        spec.kind = Kind::Gmm;
        if (!values.empty() && values.size() != 3) {
            throw std::invalid_argument("gmm noise takes pi,v1,v2");
        }
        if (values.size() == 3) {
            spec.pi = values[0];
            spec.v1 = values[1];
            spec.v2 = values[2];
        }
    } else if (kind == "sp") {
        spec.kind = Kind::SaltPepper;
        if (values.size() > 1) throw std::invalid_argument("sp noise takes a single probability");
        if (values.size() == 1) spec.p = values[0];
    } else {
        throw std::invalid_argument("unknown noise kind '" + kind + "' (expected none|gmm|sp)");
    }
    spec.validate();
    return spec;
}

std::string NoiseSpec::to_string() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::None: return "none";
    case Kind::Gmm: os << "gmm:" << pi << ',' << v1 << ',' << v2; break;
    case Kind::SaltPepper: os << "sp:" << p; break;
    }
    return os.str();
}

SynthInstance synth_tr_tensor(const Shape& shape, const std::vector<std::size_t>& ranks,
                              std::uint64_t seed) {
    const std::size_t n = shape.size();
    if (ranks.size() != n) throw std::invalid_argument("synth_tr_tensor: ranks/shape length mismatch");
    for (auto r : ranks)
        if (r == 0) throw std::invalid_argument("synth_tr_tensor: ranks must be >= 1");

    // own stream, so a solver seeded with the same value starts uncorrelated with the truth
    const std::uint64_t stream = seed ^ 0x5eedda7a5eedda7aULL;
    SynthInstance out;
    const bool absorb_offset = std::all_of(ranks.begin(), ranks.end(), [](auto r) { return r >= 2; });

    if (!absorb_offset) {
        TRCores raw = init_cores(shape, ranks, stream);
        std::vector<DenseTensor> cores = raw.cores();
        for (auto& z : cores)
            for (auto& v : z.values()) v = std::abs(v);
        raw = TRCores(std::move(cores));
        DenseTensor x = tr_reconstruct(raw);
        const double mx = *std::max_element(x.values().begin(), x.values().end());
        out.scale = mx > 0.0 ? 1.0 / mx : 1.0;
        out.offset = 0.0;
        std::vector<DenseTensor> scaled = raw.cores();
        for (auto& v : scaled[0].values()) v *= out.scale;
        out.cores = TRCores(std::move(scaled));
        out.tensor = out.scale * x;
        return out;
    }

    std::vector<std::size_t> inner(n);
    for (std::size_t k = 0; k < n; ++k) inner[k] = ranks[k] - 1;
    const TRCores signal = init_cores(shape, inner, stream);
    const DenseTensor y = tr_reconstruct(signal);
    const auto [mn, mx] = std::minmax_element(y.values().begin(), y.values().end());
    const double range = *mx - *mn;
    out.scale = range > 0.0 ? 1.0 / range : 1.0;
    out.offset = range > 0.0 ? -*mn / range : 0.5 - *mn;

    // block-diagonal slices: diag(signal slice, constant), offset on core 0
    std::vector<DenseTensor> cores;
    cores.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& s = signal.core(k);
        const std::size_t rl = ranks[k];
        const std::size_t rr = ranks[(k + 1) % n];
        const std::size_t il = inner[k];
        const std::size_t ir = inner[(k + 1) % n];
        DenseTensor z({rl, shape[k], rr});
        const double sig_scale = k == 0 ? out.scale : 1.0;
        const double constant = k == 0 ? out.offset : 1.0;
        for (std::size_t m = 0; m < shape[k]; ++m) {
            for (std::size_t b = 0; b < ir; ++b)
                for (std::size_t a = 0; a < il; ++a)
                    z[a + rl * (m + shape[k] * b)] = sig_scale * s[a + il * (m + shape[k] * b)];
            z[il + rl * (m + shape[k] * ir)] = constant;
        }
        cores.push_back(std::move(z));
    }
    out.cores = TRCores(std::move(cores));
    out.tensor = DenseTensor(shape);
    for (std::size_t i = 0; i < y.size(); ++i) out.tensor[i] = out.scale * y[i] + out.offset;
    return out;
}

DenseTensor add_gmm_noise(const DenseTensor& x, const NoiseSpec& spec) {
    NoiseSpec s = spec;
    s.kind = NoiseSpec::Kind::Gmm;
    return add_noise(x, s);
}

DenseTensor add_salt_pepper(const DenseTensor& x, const NoiseSpec& spec) {
    NoiseSpec s = spec;
    s.kind = NoiseSpec::Kind::SaltPepper;
    return add_noise(x, s);
}

DenseTensor add_noise(const DenseTensor& x, const NoiseSpec& spec,
                      const std::optional<ObservationMask>& where) {
    spec.validate();
    if (where) require_same_shape(x.shape(), where->shape(), "add_noise");
    DenseTensor out = x;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd1 = std::sqrt(spec.v1);
    const double sd2 = std::sqrt(spec.v2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (where && !where->observed(i)) continue;
        switch (spec.kind) {
        case NoiseSpec::Kind::None: break;
        case NoiseSpec::Kind::Gmm: {
            const double sd = unit(rng) < spec.pi ? sd1 : sd2;
            out[i] += sd * normal(rng);
            break;
        }
        case NoiseSpec::Kind::SaltPepper:
            if (unit(rng) < spec.p) out[i] = unit(rng) < 0.5 ? spec.low : spec.high;
            break;
        }
    }
    return out;
}

ObservationMask random_mask(const Shape& shape, double rate, std::uint64_t seed) {
    if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("observation rate must lie in (0, 1]");
    const std::size_t total = num_elements(shape);
    const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(total)));
    ObservationMask mask(shape, false);
    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> picked;
    picked.reserve(count);
    std::mt19937_64 rng(seed);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);
    for (auto i : picked) mask.set(i, true);
    return mask;
}

Psnr psnr(const DenseTensor& truth, const DenseTensor& estimate, double peak,
          const std::optional<ObservationMask>& subset) {
    require_same_shape(truth.shape(), estimate.shape(), "psnr");
    if (subset) require_same_shape(truth.shape(), subset->shape(), "psnr");
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (subset && !subset->observed(i)) continue;
        const double diff = truth[i] - estimate[i];
        acc += diff * diff;
        ++count;
    }
    if (count == 0) throw std::invalid_argument("psnr: empty evaluation subset");
    const double mse = acc / static_cast<double>(count);
    if (mse == 0.0) return {kPsnrCap, true};
    return {std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse)), false};
}

double relative_error(const DenseTensor& truth, const DenseTensor& estimate,
                      const std::optional<ObservationMask>& subset) {
    require_same_shape(truth.shape(), estimate.shape(), "relative_error");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (subset && !subset->observed(i)) continue;
        num += (truth[i] - estimate[i]) * (truth[i] - estimate[i]);
        den += truth[i] * truth[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace rtr
