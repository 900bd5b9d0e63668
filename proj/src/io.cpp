#include "rtr/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace rtr {

namespace fs = std::filesystem;

namespace {

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <typename T>
void put(std::string& out, T v) {
    v = to_little(v);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Reader {
public:
    Reader(const std::string& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(v);
    }

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw IoError(path_.string() + ": truncated file");
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    const char* cursor() const { return bytes_.data() + pos_; }

private:
    const std::string& bytes_;
    fs::path path_;
    std::size_t pos_ = 0;
};

std::string header(const Shape& shape) {
    std::string out(kTensorMagic, 4);
    put<std::uint16_t>(out, kTensorVersion);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(shape.size()));
    for (auto d : shape) put<std::uint64_t>(out, d);
    return out;
}

Shape parse_header(Reader& r, const fs::path& path, std::size_t entry_bytes) {
    r.need(4);
    if (std::memcmp(r.cursor(), kTensorMagic, 4) != 0) throw IoError(path.string() + ": bad magic");
    r.get<std::uint32_t>();
    const auto version = r.get<std::uint16_t>();
    if (version != kTensorVersion) {
        throw IoError(path.string() + ": unsupported version " + std::to_string(version));
    }
    const auto order = r.get<std::uint16_t>();
    if (order < 2) throw IoError(path.string() + ": tensor order must be >= 2");
    Shape shape(order);
    std::size_t total = 1;
    for (auto& d : shape) {
        const auto v = r.get<std::uint64_t>();
        if (v == 0) throw IoError(path.string() + ": zero-sized mode");
        if (v > std::numeric_limits<std::size_t>::max() / entry_bytes / total) {
            throw IoError(path.string() + ": dimensions overflow");
        }
        d = static_cast<std::size_t>(v);
        total *= d;
    }
    if (r.remaining() < total * entry_bytes) throw IoError(path.string() + ": truncated payload");
    if (r.remaining() > total * entry_bytes) throw IoError(path.string() + ": trailing bytes after payload");
    return shape;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
    std::random_device rd;
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(rd());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw IoError("write failed for " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot move output into place at " + path.string() + ": " + ec.message());
    }
}

void write_tensor(const DenseTensor& x, const fs::path& path) {
    if (x.empty()) throw IoError("refusing to write an empty tensor");
    std::string out = header(x.shape());
    out.reserve(out.size() + x.size() * 8);
    for (double v : x.values()) put<double>(out, v);
    write_file_atomic(path, out);
}

DenseTensor read_tensor(const fs::path& path) {
    const std::string bytes = read_all(path);
    Reader r(bytes, path);
    Shape shape = parse_header(r, path, 8);
    std::vector<double> data(num_elements(shape));
    for (auto& v : data) v = r.get<double>();
    return DenseTensor(std::move(shape), std::move(data));
}

void write_mask(const ObservationMask& p, const fs::path& path) {
    if (p.size() == 0) throw IoError("refusing to write an empty mask");
    std::string out = header(p.shape());
    for (auto b : p.bits()) out.push_back(static_cast<char>(b));
    write_file_atomic(path, out);
}

ObservationMask read_mask(const fs::path& path) {
    const std::string bytes = read_all(path);
    Reader r(bytes, path);
    Shape shape = parse_header(r, path, 1);
    std::vector<std::uint8_t> bits(num_elements(shape));
    for (auto& b : bits) {
        b = r.get<std::uint8_t>();
        if (b > 1) throw IoError(path.string() + ": mask bytes must be 0 or 1");
    }
    return ObservationMask(std::move(shape), std::move(bits));
}

void save_cores(const TRCores& cores, const fs::path& dir, const nlohmann::json& provenance) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["N"] = cores.order();
    manifest["dims"] = cores.dims();
    manifest["ranks"] = cores.ranks();
    manifest["seed"] = provenance.contains("seed") ? provenance["seed"] : nlohmann::json(nullptr);
    manifest["provenance"] = provenance;
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t k = 0; k < cores.order(); ++k) {
        const std::string name = "core_" + std::to_string(k + 1) + ".dten";
        write_tensor(cores.core(k), dir / name);
        files.push_back(name);
    }
    manifest["cores"] = files;
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

nlohmann::json load_manifest(const fs::path& dir) {
    try {
        return nlohmann::json::parse(read_all(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError((dir / "manifest.json").string() + ": " + e.what());
    }
}

TRCores load_cores(const fs::path& dir) {
    const auto manifest = load_manifest(dir);
    try {
        const auto n = manifest.at("N").get<std::size_t>();
        const auto dims = manifest.at("dims").get<std::vector<std::size_t>>();
        const auto ranks = manifest.at("ranks").get<std::vector<std::size_t>>();
        const auto files = manifest.at("cores").get<std::vector<std::string>>();
        if (dims.size() != n || ranks.size() != n || files.size() != n) {
            throw IoError(dir.string() + ": manifest lists inconsistent core counts");
        }
        std::vector<DenseTensor> cores;
        for (std::size_t k = 0; k < n; ++k) {
            DenseTensor z = read_tensor(dir / files[k]);
            const Shape expected{ranks[k], dims[k], ranks[(k + 1) % n]};
            if (z.shape() != expected) {
                throw IoError(dir.string() + ": core " + std::to_string(k + 1) + " has shape " +
                              shape_string(z.shape()) + ", manifest says " + shape_string(expected));
            }
            cores.push_back(std::move(z));
        }
        return TRCores(std::move(cores));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(dir.string() + ": malformed manifest: " + e.what());
    } catch (const ShapeError& e) {
        throw IoError(dir.string() + ": " + e.what());
    }
}

DenseTensor ingest_image_stack(const std::vector<fs::path>& paths) {
    if (paths.empty()) throw IoError("no images given");
    std::vector<Rgb8Image> frames;
    frames.reserve(paths.size());
    for (const auto& p : paths) {
        frames.push_back(read_image(p));
        if (frames.back().height != frames.front().height || frames.back().width != frames.front().width) {
            throw IoError(p.string() + ": image dimensions differ from " + paths.front().string());
        }
    }
    const std::size_t h = frames.front().height;
    const std::size_t w = frames.front().width;
    Shape shape{h, w, 3};
    if (frames.size() > 1) shape.push_back(frames.size());
    DenseTensor x(shape);
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto& px = frames[f].pixels;
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t col = 0; col < w; ++col)
                for (std::size_t row = 0; row < h; ++row)
                    x[row + h * (col + w * (c + 3 * f))] = px[3 * (row * w + col) + c] / 255.0;
    }
    return x;
}

void write_ppm(const DenseTensor& rgb, const fs::path& path, std::size_t frame) {
    if (rgb.order() < 3 || rgb.dim(2) != 3) throw IoError("write_ppm: expected an H x W x 3 [x F] tensor");
    const std::size_t h = rgb.dim(0);
    const std::size_t w = rgb.dim(1);
    const std::size_t frames = rgb.order() > 3 ? rgb.dim(3) : 1;
    if (frame >= frames) throw IoError("write_ppm: frame out of range");
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (std::size_t row = 0; row < h; ++row)
        for (std::size_t col = 0; col < w; ++col)
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = std::clamp(rgb[row + h * (col + w * (c + 3 * frame))], 0.0, 1.0);
                out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
            }
    write_file_atomic(path, out);
}

std::string metrics_header() {
    return "run_id,iteration,objective,residual,sigma,e,ms,psnr,steps,sample_sizes";
}

namespace {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void emit_metrics(const SolverTrace& trace, const fs::path& path, const std::string& run_id) {
    std::string existing;
    if (fs::exists(path)) existing = read_all(path);
    std::ostringstream os;
    os << existing;
    if (existing.empty()) os << metrics_header() << '\n';
    for (const auto& rec : trace.iterations) {
        os << run_id << ',' << rec.iteration << ',' << fmt_double(rec.objective) << ','
           << fmt_double(rec.residual) << ',' << fmt_double(rec.sigma) << ','
           << fmt_double(rec.stop_metric) << ',' << fmt_double(rec.millis) << ','
           << fmt_double(rec.psnr) << ',';
        for (std::size_t i = 0; i < rec.steps.size(); ++i) os << (i ? ";" : "") << fmt_double(rec.steps[i]);
        os << ',';
        for (std::size_t b = 0; b < rec.sample_sizes.size(); ++b) {
            if (b) os << '|';
            for (std::size_t j = 0; j < rec.sample_sizes[b].size(); ++j)
                os << (j ? "x" : "") << rec.sample_sizes[b][j];
        }
        os << '\n';
    }
    write_file_atomic(path, os.str());
}

}  // namespace rtr
