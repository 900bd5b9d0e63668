#include "rtr/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "solver_driver.hpp"

namespace rtr {

namespace {

// s^p, saturating at `cap`.
std::size_t pow_saturating(std::size_t s, std::size_t p, std::size_t cap) {
    std::size_t acc = 1;
    for (std::size_t i = 0; i < p; ++i) {
        if (acc > cap / s) return cap;
        acc *= s;
    }
    return acc;
}

std::vector<std::size_t> strides_of(const Shape& shape) {
    std::vector<std::size_t> s(shape.size());
    std::size_t acc = 1;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        s[k] = acc;
        acc *= shape[k];
    }
    return s;
}

std::vector<std::size_t> draw_sorted(std::size_t population, std::size_t count, std::mt19937_64& rng) {
    std::vector<std::size_t> all(population);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (count >= population) return all;
    std::vector<std::size_t> out;
    out.reserve(count);
    std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
    return out;
}

// Source offsets of the gathered tensor, in the gathered tensor's linear order.
template <typename Fn>
void for_each_gathered(const Shape& shape, const SketchPlan& plan, Fn&& fn) {
    const std::size_t n = shape.size();
    const auto strides = strides_of(shape);
    const Shape sizes = plan.sizes();
    std::vector<std::size_t> pos(n, 0);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < n; ++k) offset += plan.indices[k][0] * strides[k];
    const std::size_t total = num_elements(sizes);
    for (std::size_t out = 0; out < total; ++out) {
        fn(out, offset);
        for (std::size_t k = 0; k < n; ++k) {
            offset -= plan.indices[k][pos[k]] * strides[k];
            if (++pos[k] < sizes[k]) {
                offset += plan.indices[k][pos[k]] * strides[k];
                break;
            }
            pos[k] = 0;
            offset += plan.indices[k][0] * strides[k];
        }
    }
}

void check_plan(const Shape& shape, const SketchPlan& plan) {
    if (plan.indices.size() != shape.size()) throw ShapeError("sketch plan order does not match tensor");
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (plan.indices[k].empty()) throw ShapeError("sketch plan has an empty index set");
        for (auto i : plan.indices[k])
            if (i >= shape[k]) throw ShapeError("sketch plan index out of range");
    }
}

}  // namespace

Shape SketchPlan::sizes() const {
    Shape s;
    s.reserve(indices.size());
    for (const auto& set : indices) s.push_back(set.size());
    return s;
}

bool SketchPlan::full(const Shape& shape) const { return sizes() == shape; }

std::size_t sketch_sample_size(std::size_t dim, std::size_t sample_param, std::size_t order) {
    if (order < 2) throw std::invalid_argument("sketch_sample_size: order must be >= 2");
    if (sample_param < 1) throw std::invalid_argument("sample parameter J must be >= 1");
    const std::size_t p = order - 1;
    auto s = static_cast<std::size_t>(
        std::max(1.0, std::floor(std::pow(static_cast<double>(sample_param), 1.0 / static_cast<double>(p)))));
    while (s > 1 && pow_saturating(s - 1, p, sample_param) >= sample_param) --s;
    while (pow_saturating(s, p, sample_param) < sample_param) ++s;
    return std::min(dim, s);
}

std::uint64_t sketch_seed(std::uint64_t seed, std::size_t iteration, std::size_t block) {
    // splitmix64 finalizer over a simple counter combination
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (1 + iteration * 0x10001ULL + block);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SketchPlan make_sketch_plan(const Shape& shape, std::size_t active, std::size_t sample_param,
                            std::uint64_t seed) {
    const std::size_t n = shape.size();
    if (active >= n) throw ShapeError("make_sketch_plan: active mode out of range");
    if (sample_param < 1) throw std::invalid_argument("sample parameter J must be >= 1");
    std::mt19937_64 rng(seed);
    SketchPlan plan;
    plan.active = active;
    plan.indices.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t count = k == active ? shape[k] : sketch_sample_size(shape[k], sample_param, n);
        plan.indices[k] = draw_sorted(shape[k], count, rng);
    }
    return plan;
}

DenseTensor sample_subtensor(const DenseTensor& x, const SketchPlan& plan) {
    check_plan(x.shape(), plan);
    DenseTensor out(plan.sizes());
    for_each_gathered(x.shape(), plan, [&](std::size_t o, std::size_t src) { out[o] = x[src]; });
    return out;
}

ObservationMask sample_subtensor(const ObservationMask& p, const SketchPlan& plan) {
    check_plan(p.shape(), plan);
    ObservationMask out(plan.sizes(), false);
    for_each_gathered(p.shape(), plan, [&](std::size_t o, std::size_t src) { out.set(o, p.observed(src)); });
    return out;
}

TRCores sample_cores(const TRCores& cores, const SketchPlan& plan) {
    check_plan(cores.dims(), plan);
    std::vector<DenseTensor> out;
    out.reserve(cores.order());
    for (std::size_t k = 0; k < cores.order(); ++k) {
        const auto& z = cores.core(k);
        const std::size_t rl = z.dim(0);
        const std::size_t mid = z.dim(1);
        const std::size_t rr = z.dim(2);
        const auto& idx = plan.indices[k];
        DenseTensor s({rl, idx.size(), rr});
        for (std::size_t b = 0; b < rr; ++b)
            for (std::size_t m = 0; m < idx.size(); ++m)
                for (std::size_t a = 0; a < rl; ++a)
                    s[a + rl * (m + idx.size() * b)] = z[a + rl * (idx[m] + mid * b)];
        out.push_back(std::move(s));
    }
    return TRCores(std::move(out));
}

Matrix sampled_gradient(const DenseTensor& xs, const ObservationMask& ps, const DenseTensor& ws,
                        const TRCores& sampled, std::size_t k) {
    return gradient_block(xs, ps, ws, sampled, k);
}

Variant parse_variant(const std::string& name) {
    if (name == "sawrtrd") return Variant::Sawrtrd;
    if (name == "unscaled") return Variant::UnscaledGradient;
    if (name == "local-gram") return Variant::LocalScaledTerm;
    if (name == "row-uniform") return Variant::UniformRowSampling;
    throw std::invalid_argument("unknown variant '" + name +
                                "' (expected sawrtrd|unscaled|local-gram|row-uniform)");
}

std::string to_string(Variant v) {
    switch (v) {
    case Variant::Sawrtrd: return "sawrtrd";
    case Variant::UnscaledGradient: return "unscaled";
    case Variant::LocalScaledTerm: return "local-gram";
    case Variant::UniformRowSampling: return "row-uniform";
    }
    return "sawrtrd";
}

namespace {

// Uniformly sampled columns of X_[k] / P_[k] and the matching rows of Z^{!=k}_[2].
struct RowSample {
    Matrix xk, pk, m;
};

RowSample sample_rows(const DenseTensor& x, const ObservationMask& p, const TRCores& cores,
                      std::size_t k, std::size_t count, std::mt19937_64& rng) {
    const Shape& shape = x.shape();
    const std::size_t n = shape.size();
    const auto strides = strides_of(shape);
    std::size_t cols = 1;
    for (std::size_t j = 0; j < n; ++j)
        if (j != k) cols *= shape[j];
    const auto picked = draw_sorted(cols, count, rng);

    const std::size_t rk = cores.core(k).dim(0);
    const std::size_t rn = cores.core(k).dim(2);
    RowSample out{Matrix(shape[k], picked.size()), Matrix(shape[k], picked.size()),
                  Matrix(picked.size(), rk * rn)};

    std::vector<double> acc;
    std::vector<double> next;
    for (std::size_t c = 0; c < picked.size(); ++c) {
        // decode the column: i_{k+1} fastest, cyclically up to i_{k-1}
        std::size_t rem = picked[c];
        std::size_t base = 0;
        std::vector<std::size_t> idx(n, 0);
        for (std::size_t step = 1; step < n; ++step) {
            const std::size_t j = (k + step) % n;
            idx[j] = rem % shape[j];
            rem /= shape[j];
            base += idx[j] * strides[j];
        }
        for (std::size_t i = 0; i < shape[k]; ++i) {
            const std::size_t src = base + i * strides[k];
            out.xk(i, c) = x[src];
            out.pk(i, c) = p.observed(src) ? 1.0 : 0.0;
        }

        // slice product Z_{k+1}(i_{k+1}) ... Z_{k-1}(i_{k-1}), left to right
        const auto& first = cores.core((k + 1) % n);
        std::size_t rows = first.dim(0);
        std::size_t width = first.dim(2);
        acc.assign(rows * width, 0.0);
        for (std::size_t b = 0; b < width; ++b)
            for (std::size_t a = 0; a < rows; ++a)
                acc[a + rows * b] = first[a + rows * (idx[(k + 1) % n] + first.dim(1) * b)];
        for (std::size_t step = 2; step < n; ++step) {
            const std::size_t j = (k + step) % n;
            const auto& z = cores.core(j);
            next.assign(rows * z.dim(2), 0.0);
            detail::slice_gemm(acc.data(), rows, z.data() + z.dim(0) * idx[j], z.dim(0) * z.dim(1),
                               next.data(), rows, rows, width, z.dim(2));
            acc.swap(next);
            width = z.dim(2);
        }
        // M(c, a + r_k b) = S(b, a), S is r_{k+1} x r_k
        for (std::size_t b = 0; b < rn; ++b)
            for (std::size_t a = 0; a < rk; ++a) out.m(c, a + rk * b) = acc[b + rn * a];
    }
    return out;
}

}  // namespace

SolveResult ablation_variant(const DenseTensor& x, const ObservationMask& p,
                             const SolverConfig& config, Variant variant, const SolveHooks& hooks) {
    detail::validate_problem(x, p, config);
    const Shape& shape = x.shape();

    auto step = [&](std::size_t t, std::size_t k, TRCores& cores, GramCache& cache,
                    IterationRecord& rec) {
        const std::uint64_t seed = sketch_seed(config.seed, t, k);
        const SketchPlan plan = make_sketch_plan(shape, k, config.sample_param, seed);
        rec.sample_sizes.push_back(plan.sizes());

        Matrix xk, pk, m, g;
        const Matrix* gram = nullptr;
        if (variant == Variant::UniformRowSampling) {
            std::size_t count = 1;
            for (std::size_t j = 0; j < shape.size(); ++j)
                if (j != k) count *= plan.indices[j].size();
            std::mt19937_64 rng(seed ^ 0x726f772d756e6966ULL);
            auto rows = sample_rows(x, p, cores, k, count, rng);
            xk = std::move(rows.xk);
            pk = std::move(rows.pk);
            m = std::move(rows.m);
        } else {
            const TRCores sampled = sample_cores(cores, plan);
            xk = unfold_shifted(sample_subtensor(x, plan), k);
            pk = unfold_shifted(sample_subtensor(p, plan), k);
            m = subchain_matrix(sampled, k);
            if (variant == Variant::LocalScaledTerm) {
                g = gram_via_chain(GramCache(sampled), k, config.gram_budget);
                gram = &g;
            }
        }
        if (variant == Variant::Sawrtrd || variant == Variant::UniformRowSampling) {
            g = gram_via_chain(cache, k, config.gram_budget);
            gram = &g;
        }

        if (hooks.on_block) hooks.on_block(BlockInfo{t, k, cores, gram});
        DenseTensor z = cores.core(k);
        const auto out = detail::update_block(z, {xk, pk, m, gram}, config);
        cores.set_core(k, std::move(z));
        cache.refresh(k, cores.core(k));
        rec.steps.push_back(out.eta);
        return out.sigma;
    };
    return detail::run_sweeps(x, p, config, hooks, step);
}

SolveResult sawrtrd(const DenseTensor& x, const ObservationMask& p, const SolverConfig& config,
                    const SolveHooks& hooks) {
    return ablation_variant(x, p, config, Variant::Sawrtrd, hooks);
}

}  // namespace rtr
