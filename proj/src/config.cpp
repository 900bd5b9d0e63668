#include "rtr/config.hpp"

#include <stdexcept>

namespace rtr {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const json& known, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw std::invalid_argument("unknown " + where + " key '" + key + "'");
    }
}

template <typename T>
void read_key(const json& j, const char* key, T& field) {
    if (j.contains(key)) j.at(key).get_to(field);
}

const char* mode_name(KernelPolicy::Mode m) {
    switch (m) {
    case KernelPolicy::Mode::Fixed: return "fixed";
    case KernelPolicy::Mode::Adaptive: return "adaptive";
    case KernelPolicy::Mode::Infinite: return "inf";
    }
    return "adaptive";
}

const char* kind_name(NoiseSpec::Kind k) {
    switch (k) {
    case NoiseSpec::Kind::None: return "none";
    case NoiseSpec::Kind::Gmm: return "gmm";
    case NoiseSpec::Kind::SaltPepper: return "sp";
    }
    return "none";
}

}  // namespace

json kernel_to_json(const KernelPolicy& k) {
    return {{"mode", mode_name(k.mode)},
            {"sigma", k.sigma_fixed},
            {"theta", k.theta},
            {"sigma_min", k.sigma_min}};
}

KernelPolicy kernel_from_json(const json& j) {
    reject_unknown(j, kernel_to_json(KernelPolicy{}), "kernel");
    KernelPolicy k;
    std::string mode = mode_name(k.mode);
    read_key(j, "mode", mode);
    if (mode == "fixed") k.mode = KernelPolicy::Mode::Fixed;
    else if (mode == "adaptive") k.mode = KernelPolicy::Mode::Adaptive;
    else if (mode == "inf") k.mode = KernelPolicy::Mode::Infinite;
    else throw std::invalid_argument("kernel.mode must be fixed, adaptive or inf");
    read_key(j, "sigma", k.sigma_fixed);
    read_key(j, "theta", k.theta);
    read_key(j, "sigma_min", k.sigma_min);
    k.validate();
    return k;
}

json noise_to_json(const NoiseSpec& n) {
    return {{"kind", kind_name(n.kind)}, {"pi", n.pi},     {"v1", n.v1},     {"v2", n.v2},
            {"p", n.p},                  {"low", n.low},   {"high", n.high}, {"seed", n.seed}};
}

NoiseSpec noise_from_json(const json& j) {
    reject_unknown(j, noise_to_json(NoiseSpec{}), "noise");
    NoiseSpec n;
    std::string kind = kind_name(n.kind);
    read_key(j, "kind", kind);
    if (kind == "none") n.kind = NoiseSpec::Kind::None;
    else if (kind == "gmm") n.kind = NoiseSpec::Kind::Gmm;
    else if (kind == "sp") n.kind = NoiseSpec::Kind::SaltPepper;
    else throw std::invalid_argument("noise.kind must be none, gmm or sp");
    read_key(j, "pi", n.pi);
    read_key(j, "v1", n.v1);
    read_key(j, "v2", n.v2);
    read_key(j, "p", n.p);
    read_key(j, "low", n.low);
    read_key(j, "high", n.high);
    read_key(j, "seed", n.seed);
    n.validate();
    return n;
}

json RunConfig::to_json() const {
    return {
        {"command", command},
        {"shape", shape},
        {"ranks", ranks},
        {"solver", solver},
        {"variant", variant},
        {"sample_param", sample_param},
        {"kernel", kernel_to_json(kernel)},
        {"lambda", lambda},
        {"max_iter", max_iter},
        {"tol", tol},
        {"seed", seed},
        {"init_scale", init_scale},
        {"rate", rate},
        {"noise", noise_to_json(noise)},
        {"input", input},
        {"images", images},
        {"mask", mask},
        {"truth", truth},
        {"output", output},
        {"metrics", metrics},
    };
}

RunConfig RunConfig::from_json(const json& j) {
    reject_unknown(j, RunConfig{}.to_json(), "run config");
    RunConfig c;
    try {
        read_key(j, "command", c.command);
        read_key(j, "shape", c.shape);
        read_key(j, "ranks", c.ranks);
        read_key(j, "solver", c.solver);
        read_key(j, "variant", c.variant);
        read_key(j, "sample_param", c.sample_param);
        if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
        read_key(j, "lambda", c.lambda);
        read_key(j, "max_iter", c.max_iter);
        read_key(j, "tol", c.tol);
        read_key(j, "seed", c.seed);
        read_key(j, "init_scale", c.init_scale);
        read_key(j, "rate", c.rate);
        if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
        read_key(j, "input", c.input);
        read_key(j, "images", c.images);
        read_key(j, "mask", c.mask);
        read_key(j, "truth", c.truth);
        read_key(j, "output", c.output);
        read_key(j, "metrics", c.metrics);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("run config: ") + e.what());
    }
    return c;
}

SolverConfig RunConfig::solver_config() const {
    SolverConfig s;
    s.ranks = ranks;
    s.lambda = lambda;
    s.kernel = kernel;
    s.max_iter = max_iter;
    s.tol = tol;
    s.seed = seed;
    s.init_scale = init_scale;
    s.sample_param = sample_param;
    return s;
}

}  // namespace rtr
