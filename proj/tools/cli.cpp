#include "cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "rtr/config.hpp"
#include "rtr/data.hpp"
#include "rtr/gram.hpp"
#include "rtr/io.hpp"
#include "rtr/sketch.hpp"
#include "rtr/solver.hpp"

namespace rtr::cli {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Output directory built under a sibling staging name, renamed into place on commit.
class StagedDir {
public:
    StagedDir(const fs::path& target, bool force) : final_(target) {
        if (final_.empty()) throw UsageError("--out is required");
        if (fs::exists(final_) && !force) {
            throw UsageError(final_.string() + " already exists (pass --force to replace it)");
        }
        if (final_.has_parent_path()) fs::create_directories(final_.parent_path());
        std::random_device rd;
        staging_ = final_;
        staging_ += ".partial-" + std::to_string(rd());
        fs::create_directories(staging_);
    }
    StagedDir(const StagedDir&) = delete;
    StagedDir& operator=(const StagedDir&) = delete;
    ~StagedDir() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(staging_, ec);
        }
    }

    const fs::path& path() const { return staging_; }

    void commit() {
        if (fs::exists(final_)) fs::remove_all(final_);
        fs::rename(staging_, final_);
        committed_ = true;
    }

private:
    fs::path final_;
    fs::path staging_;
    bool committed_ = false;
};

struct Options {
    RunConfig cfg;
    std::string config_path;
    std::string kernel_text = "adaptive:1";
    std::string noise_text = "none";
    std::string run_id;
    bool force = false;

    std::string sweep;
    std::vector<std::size_t> sample_params;
    std::size_t repeats = 20;
    std::size_t dim = 4;
    std::size_t rank = 3;
    std::size_t n_min = 3;
    std::size_t n_max = 12;
};

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) return;
    if (!fs::exists(path)) throw UsageError(std::string(flag) + ": no such file: " + path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void add_common(CLI::App* app, Options& o) {
    app->add_option("--config", o.config_path, "Replay a saved config.json (only --out, --metrics, --run-id, --force may be combined)");
    app->add_option("--seed", o.cfg.seed, "Random seed");
    app->add_option("--out", o.cfg.output, "Output path");
    app->add_flag("--force", o.force, "Replace an existing output");
}

void add_data_options(CLI::App* app, Options& o) {
    app->add_option("--shape", o.cfg.shape, "Tensor shape for synthetic data, e.g. 16,16,16")->delimiter(',');
    app->add_option("--ranks", o.cfg.ranks, "TR ranks r_1..r_N, e.g. 3,3,3")->delimiter(',');
    app->add_option("--rate", o.cfg.rate, "Fraction of observed entries");
    app->add_option("--noise", o.noise_text, "none | gmm[:pi,v1,v2] | sp[:p]");
    app->add_option("--truth", o.cfg.truth, "Ground-truth tensor (.dten)");
    app->add_option("--images", o.cfg.images, "PNG/PPM images forming the ground truth");
}

void add_solver_options(CLI::App* app, Options& o) {
    app->add_option("--sample-param", o.cfg.sample_param, "Sample parameter J of the sketched solver");
    app->add_option("--kernel", o.kernel_text, "fixed:SIGMA | adaptive:THETA | inf");
    app->add_option("--lambda", o.cfg.lambda, "Preconditioner ridge");
    app->add_option("--max-iter", o.cfg.max_iter, "Maximum outer iterations");
    app->add_option("--tol", o.cfg.tol, "Stop when the relative change drops below this");
    app->add_option("--init-scale", o.cfg.init_scale, "Scale of the random initial cores");
    app->add_option("--solver", o.cfg.solver, "awrtrd | sawrtrd | unweighted")
        ->check(CLI::IsMember({"awrtrd", "sawrtrd", "unweighted"}));
    app->add_option("--variant", o.cfg.variant, "sawrtrd | unscaled | local-gram | row-uniform")
        ->check(CLI::IsMember({"sawrtrd", "unscaled", "local-gram", "row-uniform"}));
    app->add_option("--metrics", o.cfg.metrics, "Append per-iteration metrics to this CSV");
    app->add_option("--run-id", o.run_id, "Run id column of the metrics CSV");
}

// Turns parsed flags into the final RunConfig, or loads it from --config.
void finalize(CLI::App* app, Options& o) {
    if (!o.config_path.empty()) {
        static const std::set<std::string> allowed{"--config", "--out", "--metrics", "--run-id", "--force"};
        for (const auto* opt : app->get_options()) {
            if (opt->count() > 0 && !allowed.count(opt->get_name())) {
                throw UsageError(opt->get_name() + " cannot be combined with --config");
            }
        }
        require_file(o.config_path, "--config");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text(o.config_path));
        } catch (const nlohmann::json::exception& e) {
            throw UsageError(o.config_path + ": " + e.what());
        }
        RunConfig loaded = RunConfig::from_json(j);
        if (loaded.command != app->get_name()) {
            throw UsageError(o.config_path + " was written by '" + loaded.command + "', not '" +
                             app->get_name() + "'");
        }
        if (app->count("--out")) loaded.output = o.cfg.output;
        if (app->count("--metrics")) loaded.metrics = o.cfg.metrics;
        o.cfg = std::move(loaded);
        return;
    }
    o.cfg.command = app->get_name();
    o.cfg.kernel = KernelPolicy::parse(o.kernel_text);
    o.cfg.noise = NoiseSpec::parse(o.noise_text);
    o.cfg.noise.seed = o.cfg.seed + 1;
}

std::string run_id_of(const Options& o) {
    return o.run_id.empty() ? o.cfg.command + "-" + std::to_string(o.cfg.seed) : o.run_id;
}

std::uint64_t mask_seed(const RunConfig& c) { return c.seed + 2; }

// Ground truth from --truth, --images, or a synthetic ring from --shape/--ranks.
struct Truth {
    DenseTensor tensor;
    std::optional<TRCores> cores;
    bool images = false;
};

std::optional<Truth> load_truth(const RunConfig& c, bool allow_synth) {
    if (!c.truth.empty() && !c.images.empty()) throw UsageError("give either --truth or --images, not both");
    if (!c.truth.empty()) {
        require_file(c.truth, "--truth");
        return Truth{read_tensor(c.truth), std::nullopt, false};
    }
    if (!c.images.empty()) {
        for (const auto& p : c.images) require_file(p, "--images");
        std::vector<fs::path> paths(c.images.begin(), c.images.end());
        return Truth{ingest_image_stack(paths), std::nullopt, true};
    }
    if (allow_synth && !c.shape.empty()) {
        if (c.ranks.size() != c.shape.size()) throw UsageError("--ranks must give one rank per mode of --shape");
        auto inst = synth_tr_tensor(c.shape, c.ranks, c.seed);
        return Truth{std::move(inst.tensor), std::move(inst.cores), false};
    }
    return std::nullopt;
}

ObservationMask make_mask(const Shape& shape, const RunConfig& c) {
    if (c.rate >= 1.0) {
        if (c.rate > 1.0) throw std::invalid_argument("observation rate must lie in (0, 1]");
        return ObservationMask(shape, true);
    }
    return random_mask(shape, c.rate, mask_seed(c));
}

// Noise on observed entries, zeros elsewhere.
DenseTensor corrupt(const DenseTensor& truth, const ObservationMask& p, const NoiseSpec& noise) {
    DenseTensor x = add_noise(truth, noise, p);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!p.observed(i)) x[i] = 0.0;
    return x;
}

SolveResult solve(const DenseTensor& x, const ObservationMask& p, const RunConfig& c,
                  const SolverConfig& sc, const SolveHooks& hooks) {
    if (c.solver == "awrtrd") return awrtrd(x, p, sc, hooks);
    if (c.solver == "unweighted") return unweighted_solve(x, p, sc, hooks);
    if (c.solver == "sawrtrd") return ablation_variant(x, p, sc, parse_variant(c.variant), hooks);
    throw UsageError("unknown solver '" + c.solver + "'");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void write_config(const RunConfig& c, const fs::path& path) {
    write_file_atomic(path, c.to_json().dump(2) + "\n");
}

int cmd_synth(Options& o, std::ostream& out) {
    const RunConfig& c = o.cfg;
    if (c.images.empty() && c.truth.empty() && (c.shape.empty() || c.ranks.empty())) {
        throw UsageError("synth needs --shape and --ranks, --truth, or --images");
    }
    auto truth = load_truth(c, true);
    const ObservationMask p = make_mask(truth->tensor.shape(), c);
    const DenseTensor x = corrupt(truth->tensor, p, c.noise);

    StagedDir dir(c.output, o.force);
    write_tensor(truth->tensor, dir.path() / "truth.dten");
    write_tensor(x, dir.path() / "observed.dten");
    write_mask(p, dir.path() / "mask.dmask");
    if (truth->cores) save_cores(*truth->cores, dir.path() / "truth_cores", c.to_json());
    write_config(c, dir.path() / "config.json");
    dir.commit();

    out << "synth: shape " << shape_string(x.shape()) << ", observed " << p.count() << "/" << p.size()
        << ", noise " << c.noise.to_string() << " -> " << c.output << "\n";
    return 0;
}

int cmd_solve(Options& o, std::ostream& out, bool complete) {
    RunConfig& c = o.cfg;
    require_file(c.input, "--input");
    require_file(c.mask, "--mask");
    if (c.ranks.empty()) throw UsageError("--ranks is required");

    auto truth = load_truth(c, complete && c.input.empty());
    std::optional<DenseTensor> x;
    std::optional<ObservationMask> p;
    if (!c.input.empty()) {
        x = read_tensor(c.input);
    } else if (!complete) {
        throw UsageError("decompose needs --input");
    }
    if (complete) {
        const Shape& shape = x ? x->shape() : (truth ? truth->tensor.shape() : Shape{});
        if (shape.empty()) throw UsageError("complete needs --input, --truth, or --images");
        if (!c.mask.empty()) {
            p = read_mask(c.mask);
            require_same_shape(shape, p->shape(), "--mask");
        } else {
            p = make_mask(shape, c);
        }
        if (!x) x = corrupt(truth->tensor, *p, c.noise);
    } else {
        p = ObservationMask(x->shape(), true);
    }
    if (truth) require_same_shape(x->shape(), truth->tensor.shape(), "--truth");

    SolverConfig sc = c.solver_config();
    sc.validate(x->order());
    SolveHooks hooks;
    if (truth) {
        hooks.on_iteration = [&](const TRCores& cores, IterationRecord& rec) {
            rec.psnr = psnr(truth->tensor, tr_reconstruct(cores)).db;
        };
    }
    const SolveResult result = solve(*x, *p, c, sc, hooks);
    const DenseTensor estimate = tr_reconstruct(result.cores);

    StagedDir dir(c.output, o.force);
    save_cores(result.cores, dir.path() / "cores", c.to_json());
    write_tensor(estimate, dir.path() / "estimate.dten");
    if (complete) write_mask(*p, dir.path() / "mask.dmask");
    if (truth && truth->images) write_ppm(estimate, dir.path() / "estimate.ppm");
    emit_metrics(result.trace, dir.path() / "metrics.csv", run_id_of(o));
    write_config(c, dir.path() / "config.json");
    dir.commit();
    if (!c.metrics.empty()) emit_metrics(result.trace, c.metrics, run_id_of(o));

    const auto& iters = result.trace.iterations;
    out << c.command << ": " << c.solver << (c.solver == "sawrtrd" ? "/" + c.variant : "") << ", "
        << iters.size() << " iterations, " << (result.trace.converged ? "converged" : "iteration cap")
        << ", last e = " << fmt(iters.back().stop_metric);
    if (truth) {
        out << ", PSNR " << fmt(psnr(truth->tensor, estimate).db) << " dB";
        if (p->count() < p->size()) {
            out << " (missing entries " << fmt(psnr(truth->tensor, estimate, 1.0, p->complement()).db) << " dB)";
        }
    }
    out << " -> " << c.output << "\n";
    return 0;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

template <typename Fn>
double median_ms(std::size_t repeats, std::size_t inner, Fn&& fn) {
    std::vector<double> samples;
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto start = Clock::now();
        for (std::size_t i = 0; i < inner; ++i) fn();
        samples.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count() /
                          static_cast<double>(inner));
    }
    return median(samples);
}

void emit_csv(const Options& o, const std::string& text, std::ostream& out) {
    if (o.cfg.output.empty()) {
        out << text;
        return;
    }
    if (fs::exists(o.cfg.output) && !o.force) {
        throw UsageError(o.cfg.output + " already exists (pass --force to replace it)");
    }
    write_file_atomic(o.cfg.output, text);
}

int cmd_bench(Options& o, std::ostream& out) {
    const RunConfig& c = o.cfg;
    std::ostringstream csv;
    csv << "sweep,N,J,method,median_ms,psnr,status\n";
    if (o.sweep == "N") {
        if (o.n_min < 2 || o.n_max < o.n_min) throw UsageError("need 2 <= --n-min <= --n-max");
        for (std::size_t n = o.n_min; n <= o.n_max; ++n) {
            const TRCores cores = init_cores(Shape(n, o.dim), std::vector<std::size_t>(n, o.rank), c.seed);
            const GramCache cache(cores);
            volatile double sink = 0.0;
            const double chain = median_ms(o.repeats, 10, [&] { sink = sink + gram_via_chain(cache, 0)(0, 0); });
            csv << "N," << n << ",," << "chain," << chain << ",,ok\n";
            double cols = 1.0;
            for (std::size_t j = 1; j < n; ++j) cols *= static_cast<double>(o.dim);
            if (cols * static_cast<double>(o.rank * o.rank) > static_cast<double>(kDefaultGramBudget)) {
                csv << "N," << n << ",,explicit,,,infeasible\n";
            } else {
                const double expl =
                    median_ms(o.repeats, 1, [&] { sink = sink + gram_explicit(cores, 0)(0, 0); });
                csv << "N," << n << ",,explicit," << expl << ",,ok\n";
            }
        }
    } else if (o.sweep == "J") {
        Shape shape = c.shape.empty() ? Shape{24, 24, 24} : c.shape;
        std::vector<std::size_t> ranks = c.ranks.empty() ? std::vector<std::size_t>(shape.size(), 3) : c.ranks;
        if (ranks.size() != shape.size()) throw UsageError("--ranks must give one rank per mode of --shape");
        const auto inst = synth_tr_tensor(shape, ranks, c.seed);
        const ObservationMask p = make_mask(shape, c);
        const DenseTensor x = corrupt(inst.tensor, p, c.noise);
        SolverConfig sc = c.solver_config();
        sc.ranks = ranks;
        sc.record_objective = false;
        sc.validate(shape.size());
        auto per_iter = [](const SolveResult& r) {
            std::vector<double> ms;
            for (const auto& rec : r.trace.iterations) ms.push_back(rec.millis);
            return median(ms);
        };
        std::vector<std::size_t> js = o.sample_params.empty() ? std::vector<std::size_t>{16, 64, 196, 1024, 4096}
                                                              : o.sample_params;
        for (auto j : js) {
            sc.sample_param = j;
            const auto r = sawrtrd(x, p, sc);
            csv << "J," << shape.size() << ',' << j << ",sawrtrd," << per_iter(r) << ','
                << psnr(inst.tensor, tr_reconstruct(r.cores)).db << ",ok\n";
        }
        const auto full = awrtrd(x, p, sc);
        csv << "J," << shape.size() << ',' << x.size() << ",awrtrd," << per_iter(full) << ','
            << psnr(inst.tensor, tr_reconstruct(full.cores)).db << ",ok\n";
    } else {
        throw UsageError("--sweep must be N or J");
    }
    emit_csv(o, csv.str(), out);
    return 0;
}

int cmd_ablate(Options& o, std::ostream& out) {
    RunConfig& c = o.cfg;
    if (c.shape.empty() && c.truth.empty() && c.images.empty()) c.shape = {24, 24, 24};
    if (c.ranks.empty()) c.ranks = std::vector<std::size_t>(c.shape.empty() ? 3 : c.shape.size(), 3);
    auto truth = load_truth(c, true);
    const ObservationMask p = make_mask(truth->tensor.shape(), c);
    const DenseTensor x = corrupt(truth->tensor, p, c.noise);
    SolverConfig sc = c.solver_config();
    sc.record_objective = false;
    sc.validate(x.order());

    std::ostringstream csv;
    csv << "arm,J,psnr,seconds,iterations,converged\n";
    auto row = [&](const std::string& arm, const std::string& j, const SolveResult& r, double secs) {
        csv << arm << ',' << j << ',' << psnr(truth->tensor, tr_reconstruct(r.cores)).db << ',' << secs << ','
            << r.trace.iterations.size() << ',' << (r.trace.converged ? 1 : 0) << '\n';
    };
    auto timed = [&](auto&& fn) {
        const auto start = Clock::now();
        SolveResult r = fn();
        return std::make_pair(std::move(r), std::chrono::duration<double>(Clock::now() - start).count());
    };
    std::vector<std::size_t> js = o.sample_params.empty() ? std::vector<std::size_t>{16, 64, 256} : o.sample_params;
    for (auto j : js) {
        sc.sample_param = j;
        for (auto v : {Variant::Sawrtrd, Variant::UnscaledGradient, Variant::LocalScaledTerm,
                       Variant::UniformRowSampling}) {
            try {
                auto [r, secs] = timed([&] { return ablation_variant(x, p, sc, v); });
                row(to_string(v), std::to_string(j), r, secs);
            } catch (const SolverError& e) {
                csv << to_string(v) << ',' << j << ",,,,diverged\n";
                out << "ablate: " << to_string(v) << " at J = " << j << " diverged: " << e.what() << "\n";
            }
        }
    }
    auto [full, secs] = timed([&] { return awrtrd(x, p, sc); });
    row("awrtrd", "", full, secs);
    emit_csv(o, csv.str(), out);
    return 0;
}

}  // namespace

bool apply_thread_env(std::ostream& err) {
    const char* env = std::getenv("RTR_NUM_THREADS");
    if (!env || !*env) return true;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) {
        err << "error: RTR_NUM_THREADS must be a positive integer, got '" << env << "'\n";
        return false;
    }
    omp_set_num_threads(static_cast<int>(n));
    return true;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (!apply_thread_env(err)) return kExitUsage;

    CLI::App app{"Robust tensor-ring decomposition and completion", "rtr"};
    app.require_subcommand(1);
    Options o;

    auto* synth = app.add_subcommand("synth", "Write a ground-truth tensor, its corrupted copy and the mask");
    add_common(synth, o);
    add_data_options(synth, o);

    auto* decompose = app.add_subcommand("decompose", "Fit TR cores to a fully observed tensor");
    add_common(decompose, o);
    add_solver_options(decompose, o);
    decompose->add_option("--input", o.cfg.input, "Input tensor (.dten)");
    decompose->add_option("--ranks", o.cfg.ranks, "TR ranks r_1..r_N")->delimiter(',');
    decompose->add_option("--truth", o.cfg.truth, "Ground truth for PSNR (.dten)");

    auto* complete = app.add_subcommand("complete", "Recover a tensor from a subset of its entries");
    add_common(complete, o);
    add_data_options(complete, o);
    add_solver_options(complete, o);
    complete->add_option("--input", o.cfg.input, "Observed tensor (.dten); otherwise corrupt the truth");
    complete->add_option("--mask", o.cfg.mask, "Observation mask (.dmask); otherwise drawn from --rate");

    auto* bench = app.add_subcommand("bench", "Timing sweeps over the tensor order N or the sample parameter J");
    add_common(bench, o);
    add_data_options(bench, o);
    add_solver_options(bench, o);
    bench->add_option("--sweep", o.sweep, "N or J")->required();
    bench->add_option("--sample-params", o.sample_params, "J values for --sweep J")->delimiter(',');
    bench->add_option("--repeats", o.repeats, "Timing repeats (median reported)");
    bench->add_option("--dim", o.dim, "Mode size I for --sweep N");
    bench->add_option("--rank", o.rank, "Rank r for --sweep N");
    bench->add_option("--n-min", o.n_min, "Smallest order for --sweep N");
    bench->add_option("--n-max", o.n_max, "Largest order for --sweep N");

    auto* ablate = app.add_subcommand("ablate", "Run the sketching ablation arms and report PSNR and time");
    add_common(ablate, o);
    add_data_options(ablate, o);
    add_solver_options(ablate, o);
    ablate->add_option("--sample-params", o.sample_params, "J values to sweep")->delimiter(',');

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        finalize(sub, o);
        if (sub == synth) return cmd_synth(o, out);
        if (sub == decompose) return cmd_solve(o, out, false);
        if (sub == complete) return cmd_solve(o, out, true);
        if (sub == bench) return cmd_bench(o, out);
        if (sub == ablate) return cmd_ablate(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace rtr::cli
