#include "rtr/solver.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Cholesky>

#include "rtr/kernels.hpp"
#include "solver_driver.hpp"

namespace rtr {

void SolverConfig::validate(std::size_t order) const {
    if (ranks.size() != order) {
        throw std::invalid_argument("expected " + std::to_string(order) + " TR ranks, got " +
                                    std::to_string(ranks.size()));
    }
    for (auto r : ranks)
        if (r == 0) throw std::invalid_argument("TR ranks must be >= 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (!(init_scale >= 0.0)) throw std::invalid_argument("init_scale must be >= 0");
    if (sample_param < 1) throw std::invalid_argument("sample parameter J must be >= 1");
    kernel.validate();
}

TRCores init_cores(const Shape& shape, const std::vector<std::size_t>& ranks, std::uint64_t seed,
                   double init_scale) {
    const std::size_t n = shape.size();
    if (ranks.size() != n) throw std::invalid_argument("init_cores: ranks/shape length mismatch");
    std::mt19937_64 rng(seed);
    std::vector<DenseTensor> cores;
    cores.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t rl = ranks[k];
        const std::size_t rr = ranks[(k + 1) % n];
        DenseTensor z({rl, shape[k], rr});
        if (init_scale > 0.0) {
            std::normal_distribution<double> dist(0.0,
                                                  init_scale / std::sqrt(static_cast<double>(rl * rr)));
            for (auto& v : z.values()) v = dist(rng);
        }
        cores.push_back(std::move(z));
    }
    return TRCores(std::move(cores));
}

Matrix gradient_block(const DenseTensor& x, const ObservationMask& p, const DenseTensor& w,
                      const TRCores& cores, std::size_t k) {
    require_same_shape(x.shape(), p.shape(), "gradient_block");
    require_same_shape(x.shape(), w.shape(), "gradient_block");
    require_same_shape(x.shape(), cores.dims(), "gradient_block");
    const Matrix xk = unfold_shifted(x, k);
    const Matrix omega = unfold_shifted(w, k).cwiseProduct(unfold_shifted(p, k));
    const Matrix m = subchain_matrix(cores, k);
    const Matrix e = kernels::block_residual(xk, core_unfold_2(cores.core(k)), m);
    return omega.cwiseProduct(e) * m;
}

Matrix scaled_gradient(const Matrix& d, const Matrix& gram, double lambda) {
    if (gram.rows() != gram.cols() || gram.cols() != d.cols()) {
        throw ShapeError("scaled_gradient: Gram dimensions do not match gradient");
    }
    Matrix reg = gram;
    reg.diagonal().array() += lambda;
    const Eigen::LLT<Matrix> llt(reg);
    if (llt.info() != Eigen::Success) {
        throw SolverError("scaled_gradient: G + lambda I is not positive definite (lambda = " +
                          std::to_string(lambda) + ")");
    }
    Matrix h = llt.solve(d.transpose()).transpose();
    if (!h.allFinite()) throw SolverError("scaled_gradient: non-finite solve result");
    return h;
}

std::optional<double> line_search_step(const Matrix& d, const Matrix& h, const Matrix& wk,
                                       const Matrix& pk, const Matrix& m) {
    const double numer = (d.array() * h.array()).sum();
    if (d.isZero(0.0) || !(numer > 0.0)) return std::nullopt;
    const Matrix omega = wk.cwiseProduct(pk);
    const double denom = kernels::weighted_quadratic(omega, h, m);
    if (!(denom > 0.0)) return std::nullopt;
    return numer / denom;
}

Matrix stop_matrix(const TRCores& cores, const GramCache& cache) {
    const std::size_t last = cores.order() - 1;
    const Matrix z2 = core_unfold_2(cores.core(last));
    return z2 * gram_via_chain(cache, last) * z2.transpose();
}

double relative_change(const Matrix& d, const Matrix& d_prev) {
    const double diff = (d - d_prev).norm();
    const double scale = d.norm();
    if (scale > 0.0) return diff / scale;
    return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

namespace detail {

void validate_problem(const DenseTensor& x, const ObservationMask& p, const SolverConfig& config) {
    require_same_shape(x.shape(), p.shape(), "solver input");
    config.validate(x.order());
    if (p.count() == 0) throw std::invalid_argument("solver input has no observed entries");
    if (config.initial) {
        require_same_shape(config.initial->dims(), x.shape(), "initial cores");
        if (config.initial->ranks() != config.ranks) {
            throw std::invalid_argument("initial cores do not have the configured ranks");
        }
    }
}

Matrix scaled_gradient_with_floor(const Matrix& d, const Matrix& gram, double lambda) {
    // floor relative to the Gram's scale, which drifts with the core gauge
    const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
    double lam = lambda;
    for (int attempt = 0;; ++attempt) {
        try {
            return scaled_gradient(d, gram, lam);
        } catch (const SolverError&) {
            if (attempt == 3) throw;
            lam = std::max(lam, 1e-10 * scale) * 10.0;
        }
    }
}

BlockOutcome update_block(DenseTensor& core, const BlockData& data, const SolverConfig& config) {
    BlockOutcome out;
    Matrix z2 = core_unfold_2(core);
    const Matrix e = kernels::block_residual(data.xk, z2, data.m);

    if (config.kernel.mode == KernelPolicy::Mode::Adaptive) {
        const auto sq = kernels::masked_squares(e, data.pk);
        if (sq.count == 0) return out;
        out.sigma = kernel_width_from_mean_square(sq.sum / static_cast<double>(sq.count), config.kernel);
    } else {
        out.sigma = kernel_width_from_mean_square(0.0, config.kernel);
    }

    Matrix omega;
    Matrix d;
    kernels::weighted_gradient(e, data.pk, data.m, out.sigma, omega, d);
    if (d.isZero(0.0)) return out;

    const Matrix h = data.gram ? scaled_gradient_with_floor(d, *data.gram, config.lambda) : d;
    const double numer = (d.array() * h.array()).sum();
    if (!(numer > 0.0)) return out;
    const double denom = kernels::weighted_quadratic(omega, h, data.m);
    if (!(denom > 0.0)) return out;

    out.eta = numer / denom;
    z2 += out.eta * h;
    if (!z2.allFinite()) {
        throw SolverError("non-finite core after block update (eta = " + std::to_string(out.eta) + ")");
    }
    core = core_fold_2(z2, core.dim(0), core.dim(2));
    out.updated = true;
    return out;
}

namespace {

double objective_sigma(const KernelPolicy& policy, double last_sigma) {
    switch (policy.mode) {
    case KernelPolicy::Mode::Fixed: return policy.sigma_fixed;
    case KernelPolicy::Mode::Adaptive: return last_sigma;
    case KernelPolicy::Mode::Infinite: return kInfiniteSigma;
    }
    return kInfiniteSigma;
}

void fill_objective(const DenseTensor& x, const ObservationMask& p, const TRCores& cores,
                    double sigma, double& objective, double& residual) {
    const DenseTensor e = x - tr_reconstruct(cores);
    double acc = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (p.observed(i)) acc += hq_weight(e[i], sigma) * e[i] * e[i];
    }
    residual = std::sqrt(acc);
    objective = std::isinf(sigma) ? std::numeric_limits<double>::quiet_NaN()
                                  : correntropy_objective(e, p, sigma);
}

}  // namespace

SolveResult run_sweeps(const DenseTensor& x, const ObservationMask& p, const SolverConfig& config,
                       const SolveHooks& hooks, const BlockStep& step) {
    using Clock = std::chrono::steady_clock;
    validate_problem(x, p, config);

    SolveResult result;
    result.cores = config.initial ? *config.initial
                                  : init_cores(x.shape(), config.ranks, config.seed, config.init_scale);
    TRCores& cores = result.cores;
    GramCache cache(cores);
    const std::size_t n = cores.order();

    if (config.record_objective) {
        const DenseTensor e0 = x - tr_reconstruct(cores);
        const double sigma0 = config.kernel.mode == KernelPolicy::Mode::Adaptive
                                  ? adapt_kernel_width(e0, p, config.kernel)
                                  : objective_sigma(config.kernel, 0.0);
        if (!std::isinf(sigma0)) result.trace.initial_objective = correntropy_objective(e0, p, sigma0);
    }

    Matrix d_prev = stop_matrix(cores, cache);
    for (std::size_t t = 0; t < config.max_iter; ++t) {
        const auto start = Clock::now();
        IterationRecord rec;
        rec.iteration = t;
        for (std::size_t k = 0; k < n; ++k) rec.sigma = step(t, k, cores, cache, rec);

        const Matrix d = stop_matrix(cores, cache);
        rec.stop_metric = relative_change(d, d_prev);
        d_prev = d;
        rec.millis = std::chrono::duration<double, std::milli>(Clock::now() - start).count();

        if (config.record_objective) {
            fill_objective(x, p, cores, objective_sigma(config.kernel, rec.sigma), rec.objective,
                           rec.residual);
        }
        if (hooks.on_iteration) hooks.on_iteration(cores, rec);
        const bool done = rec.stop_metric < config.tol;
        result.trace.iterations.push_back(std::move(rec));
        if (done) {
            result.trace.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace detail

SolveResult awrtrd(const DenseTensor& x, const ObservationMask& p, const SolverConfig& config,
                   const SolveHooks& hooks) {
    detail::validate_problem(x, p, config);
    const std::size_t n = x.order();
    std::vector<Matrix> xk(n);
    std::vector<Matrix> pk(n);
    for (std::size_t k = 0; k < n; ++k) {
        xk[k] = unfold_shifted(x, k);
        pk[k] = unfold_shifted(p, k);
    }

    auto step = [&](std::size_t t, std::size_t k, TRCores& cores, GramCache& cache,
                    IterationRecord& rec) {
        const Matrix m = subchain_matrix(cores, k);
        const Matrix g = gram_via_chain(cache, k, config.gram_budget);
        if (hooks.on_block) hooks.on_block(BlockInfo{t, k, cores, &g});
        DenseTensor z = cores.core(k);
        const auto out = detail::update_block(z, {xk[k], pk[k], m, &g}, config);
        cores.set_core(k, std::move(z));
        cache.refresh(k, cores.core(k));
        rec.steps.push_back(out.eta);
        return out.sigma;
    };
    return detail::run_sweeps(x, p, config, hooks, step);
}

SolveResult unweighted_solve(const DenseTensor& x, const ObservationMask& p, SolverConfig config,
                             const SolveHooks& hooks) {
    config.kernel = KernelPolicy::infinite();
    return awrtrd(x, p, config, hooks);
}

}  // namespace rtr
