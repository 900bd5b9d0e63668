// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion ids as
// arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rtr/data.hpp"
#include "rtr/gram.hpp"
#include "rtr/hq.hpp"
#include "rtr/sketch.hpp"
#include "rtr/solver.hpp"

using namespace rtr;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[192];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

double max_abs(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

double max_abs(const DenseTensor& a, const DenseTensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

struct RandomRing {
    Shape dims;
    std::vector<std::size_t> ranks;
};

RandomRing random_ring(std::mt19937_64& rng, std::size_t n_lo, std::size_t n_hi, std::size_t i_hi,
                       std::size_t r_hi) {
    std::uniform_int_distribution<std::size_t> order(n_lo, n_hi), dim(1, i_hi), rank(1, r_hi);
    RandomRing out;
    const std::size_t n = order(rng);
    for (std::size_t k = 0; k < n; ++k) {
        out.dims.push_back(dim(rng));
        out.ranks.push_back(rank(rng));
    }
    return out;
}

// The robustness benchmark: (16,16,16), ranks (3,3,3), full observation, 20% salt and pepper.
struct Benchmark {
    DenseTensor truth;
    DenseTensor noisy;
    ObservationMask mask;
};

Benchmark robust_instance(std::uint64_t seed, const Shape& shape = {16, 16, 16}) {
    const auto inst = synth_tr_tensor(shape, std::vector<std::size_t>(shape.size(), 3), seed);
    NoiseSpec sp = NoiseSpec::parse("sp:0.2");
    sp.seed = seed + 1000;
    return {inst.tensor, add_noise(inst.tensor, sp), ObservationMask(shape, true)};
}

bool same_trace(const SolverTrace& a, const SolverTrace& b) {
    if (a.iterations.size() != b.iterations.size() || a.converged != b.converged) return false;
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    if (!same(a.initial_objective, b.initial_objective)) return false;
    for (std::size_t t = 0; t < a.iterations.size(); ++t) {
        const auto& x = a.iterations[t];
        const auto& y = b.iterations[t];
        if (!same(x.objective, y.objective) || !same(x.residual, y.residual) || x.sigma != y.sigma ||
            x.steps != y.steps || x.stop_metric != y.stop_metric)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

Outcome theorem_identity() {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto ring = random_ring(rng, 3, 5, 6, 3);
        const TRCores cores = oracle::random_cores(ring.dims, ring.ranks, rng());
        const DenseTensor x = oracle::reconstruct(cores);
        for (std::size_t k = 0; k < cores.order(); ++k) {
            const Matrix lhs = unfold_shifted(x, k);
            const Matrix rhs = core_unfold_2(cores.core(k)) * subchain_matrix(cores, k).transpose();
            worst = std::max(worst, max_abs(lhs, rhs));
        }
    }
    return {worst <= 1e-12, fmt("max abs error %.2e over 50 rings", worst)};
}

Outcome fgmc_correctness() {
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto ring = random_ring(rng, 2, 5, 6, 3);
        const TRCores cores = oracle::random_cores(ring.dims, ring.ranks, rng());
        const GramCache cache(cores);
        for (std::size_t k = 0; k < cores.order(); ++k) {
            const Matrix chain = gram_via_chain(cache, k);
            const Matrix expl = gram_explicit(cores, k);
            worst = std::max(worst, (chain - expl).norm() / expl.norm());
        }
    }
    return {worst <= 1e-10, fmt("max relative Frobenius error %.2e over 100 rings", worst)};
}

Outcome fgmc_linearity() {
    auto time_chain = [](std::size_t n) {
        const TRCores cores = init_cores(Shape(n, 4), std::vector<std::size_t>(n, 3), 7);
        const GramCache cache(cores);
        std::vector<double> samples;
        volatile double sink = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const auto t0 = Clock::now();
            for (int i = 0; i < 200; ++i) sink = sink + gram_via_chain(cache, 0)(0, 0);
            samples.push_back(seconds_since(t0));
        }
        return median(samples);
    };
    time_chain(6);  // warm-up
    const double t6 = time_chain(6);
    const double t12 = time_chain(12);
    const double ratio = t12 / t6;

    bool explicit_refused = false;
    try {
        const TRCores big = init_cores(Shape(12, 4), std::vector<std::size_t>(12, 3), 7);
        gram_explicit(big, 0);
    } catch (const GramError&) {
        explicit_refused = true;
    }
    std::string detail = fmt("time(N=12)/time(N=6) = %.2f", ratio);
    detail += explicit_refused ? "; explicit path at N=12 refused (4^11 columns)"
                               : "; explicit path at N=12 was NOT refused";
    return {ratio <= 3.0 && explicit_refused, detail};
}

Outcome gradient_fd() {
    std::mt19937_64 rng(404);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const auto ring = random_ring(rng, 3, 4, 4, 3);
        const TRCores cores = oracle::random_cores(ring.dims, ring.ranks, rng());
        const DenseTensor x = oracle::random_tensor(ring.dims, rng());
        const DenseTensor w = oracle::random_tensor(ring.dims, rng(), 0.1, 1.0);
        const ObservationMask p = oracle::random_bits(ring.dims, 0.6, rng());
        const std::size_t k = rng() % cores.order();

        const Matrix d = gradient_block(x, p, w, cores, k);
        const Matrix z2 = core_unfold_2(cores.core(k));
        Matrix fd(z2.rows(), z2.cols());
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < z2.rows(); ++i)
            for (Eigen::Index j = 0; j < z2.cols(); ++j) {
                auto eval = [&](double delta) {
                    Matrix zp = z2;
                    zp(i, j) += delta;
                    TRCores c = cores;
                    c.set_core(k, core_fold_2(zp, cores.core(k).dim(0), cores.core(k).dim(2)));
                    return oracle::half_weighted_sq(x, p, w, c);
                };
                fd(i, j) = (eval(h) - eval(-h)) / (2 * h);
            }
        // d is the negative gradient
        worst = std::max(worst, (d + fd).norm() / fd.norm());
    }
    return {worst <= 1e-5, fmt("max relative deviation from -grad (central differences) %.2e", worst)};
}

Outcome exact_line_search() {
    std::mt19937_64 rng(505);
    int ok = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto ring = random_ring(rng, 3, 4, 5, 3);
        const TRCores cores = oracle::random_cores(ring.dims, ring.ranks, rng());
        const DenseTensor x = oracle::random_tensor(ring.dims, rng());
        const DenseTensor w = oracle::random_tensor(ring.dims, rng(), 0.1, 1.0);
        const ObservationMask p = oracle::random_bits(ring.dims, 0.7, rng());
        const std::size_t k = rng() % cores.order();

        const Matrix d = gradient_block(x, p, w, cores, k);
        const Matrix h = scaled_gradient(d, gram_explicit(cores, k), 1e-8);
        const Matrix m = subchain_matrix(cores, k);
        const auto eta = line_search_step(d, h, unfold_shifted(w, k), unfold_shifted(p, k), m);
        if (!eta || !(*eta > 0.0)) continue;
        auto residual_at = [&](double step) {
            TRCores c = cores;
            const Matrix z2 = core_unfold_2(cores.core(k)) + step * h;
            c.set_core(k, core_fold_2(z2, cores.core(k).dim(0), cores.core(k).dim(2)));
            return oracle::half_weighted_sq(x, p, w, c);
        };
        const double f = residual_at(*eta);
        if (f <= residual_at(0.99 * *eta) && f <= residual_at(1.01 * *eta)) ++ok;
    }
    return {ok == 20, std::to_string(ok) + "/20 trials minimal at eta"};
}

constexpr double kBenchSigma = 0.1;

Outcome hq_monotonicity() {
    double worst_drop = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto b = robust_instance(seed);
        SolverConfig cfg;
        cfg.ranks = {3, 3, 3};
        cfg.kernel = KernelPolicy::fixed(kBenchSigma);
        cfg.max_iter = 30;
        cfg.tol = 1e-300;
        cfg.seed = seed;
        const auto r = awrtrd(b.noisy, b.mask, cfg);
        double prev = r.trace.initial_objective;
        for (const auto& rec : r.trace.iterations) {
            worst_drop = std::max(worst_drop, prev - rec.objective);
            prev = rec.objective;
        }
    }
    return {worst_drop <= 1e-9, fmt("largest per-iteration decrease %.2e (5 seeds x 30 iterations)", worst_drop)};
}

// Default protocol: adaptive width, 30 iterations, tolerance 1e-3.
SolverConfig robust_config(std::uint64_t seed) {
    SolverConfig cfg;
    cfg.ranks = {3, 3, 3};
    cfg.seed = seed;
    return cfg;
}

Outcome robustness_benefit() {
    std::vector<double> psnr_w, psnr_u, err_w, err_u;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto b = robust_instance(seed);
        const SolverConfig cfg = robust_config(seed);
        const auto rw = awrtrd(b.noisy, b.mask, cfg);
        const auto ru = unweighted_solve(b.noisy, b.mask, cfg);
        const DenseTensor xw = tr_reconstruct(rw.cores);
        const DenseTensor xu = tr_reconstruct(ru.cores);
        psnr_w.push_back(psnr(b.truth, xw).db);
        psnr_u.push_back(psnr(b.truth, xu).db);
        err_w.push_back(relative_error(b.truth, xw));
        err_u.push_back(relative_error(b.truth, xu));
    }
    const double pw = median(psnr_w), pu = median(psnr_u), ew = median(err_w), eu = median(err_u);
    std::string detail = fmt("median PSNR %.2f dB vs unweighted %.2f dB", pw, pu) +
                         fmt("; median relative error %.3e vs %.3e", ew, eu);
    return {pw > pu && ew <= 0.5 * eu, detail};
}

// Clean data: theta = 3 keeps weights near one at the residual scale. With the
// default theta = 1 the RMS-tied width settles on robust fixed points instead.
SolverConfig recovery_config(std::uint64_t seed) {
    SolverConfig cfg;
    cfg.ranks = {3, 3, 3, 2};
    cfg.kernel = KernelPolicy::adaptive(3.0);
    cfg.seed = seed;
    cfg.max_iter = 200;
    cfg.tol = 1e-300;
    return cfg;
}

Outcome exact_recovery() {
    std::vector<double> errs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto inst = synth_tr_tensor({12, 12, 12, 3}, {3, 3, 3, 2}, seed);
        const ObservationMask all(inst.tensor.shape(), true);
        const auto r = awrtrd(inst.tensor, all, recovery_config(seed));
        errs.push_back(relative_error(inst.tensor, tr_reconstruct(r.cores)));
    }
    const double med = median(errs);
    return {med <= 1e-4, fmt("median relative error %.3e after at most 200 iterations", med)};
}

Outcome completion() {
    std::vector<double> errs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto inst = synth_tr_tensor({12, 12, 12, 3}, {3, 3, 3, 2}, seed);
        const ObservationMask p = random_mask(inst.tensor.shape(), 0.3, seed + 77);
        DenseTensor x = inst.tensor;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!p.observed(i)) x[i] = 0.0;
        SolverConfig cfg = recovery_config(seed);
        cfg.max_iter = 1000;
        const auto r = awrtrd(x, p, cfg);
        errs.push_back(relative_error(inst.tensor, tr_reconstruct(r.cores), p.complement()));
    }
    const double med = median(errs);
    return {med <= 1e-2, fmt("median relative error on unobserved entries %.3e", med)};
}

Outcome sawrtrd_reduction_fidelity() {
    std::string detail;
    bool pass = true;

    // full plans: bitwise identical to the full-data solver
    bool bitwise = true;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto b = robust_instance(seed);
        SolverConfig cfg = robust_config(seed);
        cfg.max_iter = 15;
        cfg.sample_param = 1000000;
        const auto a = awrtrd(b.noisy, b.mask, cfg);
        const auto s = sawrtrd(b.noisy, b.mask, cfg);
        bitwise = bitwise && a.cores == s.cores && same_trace(a.trace, s.trace);
    }
    pass = pass && bitwise;
    detail += bitwise ? "full plans bitwise identical" : "full plans DIFFER";

    // J = 81 -> s = 9 per free mode, 81/256 = 31.6% of each block
    std::vector<double> pa, ps;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto b = robust_instance(seed);
        SolverConfig cfg = robust_config(seed);
        cfg.sample_param = 81;
        pa.push_back(psnr(b.truth, tr_reconstruct(awrtrd(b.noisy, b.mask, cfg).cores)).db);
        ps.push_back(psnr(b.truth, tr_reconstruct(sawrtrd(b.noisy, b.mask, cfg).cores)).db);
    }
    const double gap = median(pa) - median(ps);
    pass = pass && gap <= 2.0;
    detail += fmt("; PSNR awrtrd %.2f dB, sawrtrd(J=81) %.2f dB", median(pa), median(ps));

    // wall time at (24,24,24), J = 196 -> s = 14, 196/576 = 34% per block
    {
        const auto b = robust_instance(9, {24, 24, 24});
        SolverConfig cfg = robust_config(9);
        cfg.max_iter = 30;
        cfg.tol = 1e-300;
        cfg.record_objective = false;
        cfg.sample_param = 196;
        std::vector<double> ta, ts;
        for (int rep = 0; rep < 3; ++rep) {
            auto t0 = Clock::now();
            awrtrd(b.noisy, b.mask, cfg);
            ta.push_back(seconds_since(t0));
            t0 = Clock::now();
            sawrtrd(b.noisy, b.mask, cfg);
            ts.push_back(seconds_since(t0));
        }
        const double a = median(ta), s = median(ts);
        pass = pass && s < a;
        detail += fmt("; 24^3 x 30 iterations: awrtrd %.3f s, sawrtrd %.3f s", a, s);
    }
    return {pass, detail};
}

Outcome sketch_identity() {
    std::mt19937_64 rng(1111);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto ring = random_ring(rng, 2, 5, 6, 3);
        const TRCores cores = oracle::random_cores(ring.dims, ring.ranks, rng());
        const std::size_t k = rng() % cores.order();
        const SketchPlan plan = make_sketch_plan(ring.dims, k, 1 + rng() % 20, rng());
        const DenseTensor lhs = sample_subtensor(oracle::reconstruct(cores), plan);
        const DenseTensor rhs = oracle::reconstruct(sample_cores(cores, plan));
        worst = std::max(worst, max_abs(lhs, rhs));
    }
    return {worst <= 1e-12, fmt("max abs error %.2e over 50 (plan, cores) pairs", worst)};
}

Outcome infinite_sigma_reduction() {
    bool weights_one = true;
    bool bitwise = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto b = robust_instance(seed, {10, 9, 8});
        const DenseTensor e = b.noisy - b.truth;
        const DenseTensor w = update_weights(DenseTensor(e.shape()), 1e6 * e, b.mask,
                                             adapt_kernel_width(e, b.mask, KernelPolicy::infinite()));
        for (double v : w.values()) weights_one = weights_one && v == 1.0;

        SolverConfig cfg = robust_config(seed);
        cfg.max_iter = 10;
        cfg.ranks = {3, 3, 3};
        cfg.kernel = KernelPolicy::infinite();
        const auto a = awrtrd(b.noisy, b.mask, cfg);
        cfg.kernel = KernelPolicy::adaptive();
        const auto u = unweighted_solve(b.noisy, b.mask, cfg);
        bitwise = bitwise && a.cores == u.cores && same_trace(a.trace, u.trace);
    }
    std::string detail = weights_one ? "weights identically 1" : "weights NOT identically 1";
    detail += bitwise ? "; trajectories bitwise identical (5 seeds)" : "; trajectories DIFFER";
    return {weights_one && bitwise, detail};
}

Outcome ablation_ordering() {
    const std::vector<Variant> arms = {Variant::Sawrtrd, Variant::UnscaledGradient, Variant::LocalScaledTerm,
                                       Variant::UniformRowSampling};
    std::vector<std::vector<double>> scores(arms.size());
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto b = robust_instance(seed);
        SolverConfig cfg = robust_config(seed);
        cfg.max_iter = 30;
        cfg.tol = 1e-300;
        cfg.record_objective = false;
        cfg.sample_param = 36;
        for (std::size_t a = 0; a < arms.size(); ++a) {
            try {
                const auto r = ablation_variant(b.noisy, b.mask, cfg, arms[a]);
                scores[a].push_back(psnr(b.truth, tr_reconstruct(r.cores)).db);
            } catch (const SolverError&) {
                // a diverged arm scores below everything
                scores[a].push_back(-std::numeric_limits<double>::infinity());
            }
        }
    }
    bool pass = true;
    std::ostringstream os;
    os.precision(4);
    const double best = median(scores[0]);
    for (std::size_t a = 0; a < arms.size(); ++a) {
        const double m = median(scores[a]);
        if (a > 0 && m > best) pass = false;
        os << (a ? ", " : "median PSNR ") << to_string(arms[a]) << ' ' << m;
    }
    os << " (J = 36, 30 iterations)";
    return {pass, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    const std::vector<Criterion> criteria = {
        {1, "unfolding identity X_[k] = Z_k(2) M^T", 10.0, theorem_identity},
        {2, "chain Gram equals explicit Gram", 30.0, fgmc_correctness},
        {3, "chain Gram time linear in N", 0.0, fgmc_linearity},
        {4, "block gradient vs finite differences", 0.0, gradient_fd},
        {5, "exact line search minimality", 0.0, exact_line_search},
        {6, "correntropy objective monotone (fixed sigma)", 0.0, hq_monotonicity},
        {7, "robustness over the unweighted baseline", 0.0, robustness_benefit},
        {8, "noiseless exact recovery", 0.0, exact_recovery},
        {9, "completion from 30% of entries", 0.0, completion},
        {10, "sketched solver: reduction, fidelity, time", 0.0, sawrtrd_reduction_fidelity},
        {11, "sampling commutes with reconstruction", 0.0, sketch_identity},
        {12, "infinite width reduces to unweighted", 0.0, infinite_sigma_reduction},
        {13, "ablation ordering", 0.0, ablation_ordering},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = Clock::now();
        Outcome out{false, ""};
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = seconds_since(t0);
        if (c.budget_s > 0.0 && secs >= c.budget_s) {
            out.pass = false;
            out.detail += fmt("; runtime %.1f s over the %.0f s budget", secs, c.budget_s);
        }
        if (!out.pass) ++failed;
        std::printf("%s [%2d] %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
