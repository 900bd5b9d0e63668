#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "rtr/data.hpp"
#include "rtr/io.hpp"

using namespace rtr;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("rtr_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

}  // namespace

TEST(TensorFile, RoundTripBitExact) {
    TempDir dir;
    DenseTensor x = oracle::random_tensor({3, 4, 2, 5}, 1);
    x[0] = -0.0;
    x[1] = 1e-308;
    x[2] = std::numeric_limits<double>::max();
    write_tensor(x, dir.path() / "x.dten");
    const DenseTensor y = read_tensor(dir.path() / "x.dten");
    EXPECT_EQ(y.shape(), x.shape());
    EXPECT_EQ(std::memcmp(x.data(), y.data(), x.size() * sizeof(double)), 0);
    EXPECT_EQ(fs::file_size(dir.path() / "x.dten"), 4u + 2 + 2 + 4 * 8 + x.size() * 8);
}

TEST(TensorFile, HeaderLayout) {
    TempDir dir;
    write_tensor(DenseTensor(Shape{2, 3}, 1.0), dir.path() / "x.dten");
    const std::string b = slurp(dir.path() / "x.dten");
    EXPECT_EQ(b.substr(0, 4), "DTEN");
    EXPECT_EQ(static_cast<unsigned char>(b[4]), 1);
    EXPECT_EQ(static_cast<unsigned char>(b[6]), 2);
    EXPECT_EQ(static_cast<unsigned char>(b[8]), 2);
    EXPECT_EQ(static_cast<unsigned char>(b[16]), 3);
}

TEST(TensorFile, CorruptionRejected) {
    TempDir dir;
    const fs::path p = dir.path() / "x.dten";
    write_tensor(oracle::random_tensor({3, 3}, 2), p);
    const std::string good = slurp(p);

    std::string bad = good;
    bad[0] = 'X';
    dump(p, bad);
    EXPECT_THROW(read_tensor(p), IoError);

    dump(p, good.substr(0, good.size() - 3));
    EXPECT_THROW(read_tensor(p), IoError);

    dump(p, good + "junk");
    EXPECT_THROW(read_tensor(p), IoError);

    bad = good;
    bad[4] = 9;
    dump(p, bad);
    EXPECT_THROW(read_tensor(p), IoError);

    bad = good;
    for (int i = 8; i < 16; ++i) bad[i] = 0;
    dump(p, bad);
    EXPECT_THROW(read_tensor(p), IoError);

    bad = good;
    for (int i = 8; i < 16; ++i) bad[i] = static_cast<char>(0xff);
    dump(p, bad);
    EXPECT_THROW(read_tensor(p), IoError);

    EXPECT_THROW(read_tensor(dir.path() / "missing.dten"), IoError);
    EXPECT_THROW(write_tensor(DenseTensor(), p), IoError);
}

TEST(MaskFile, RoundTripAndValidation) {
    TempDir dir;
    const fs::path p = dir.path() / "m.dmask";
    const ObservationMask m = oracle::random_bits({4, 5, 3}, 0.4, 3);
    write_mask(m, p);
    EXPECT_EQ(read_mask(p), m);
    std::string b = slurp(p);
    b.back() = 2;
    dump(p, b);
    EXPECT_THROW(read_mask(p), IoError);
}

TEST(Cores, RoundTripAndManifest) {
    TempDir dir;
    const TRCores c = oracle::random_cores({4, 3, 5}, {2, 3, 2}, 5);
    save_cores(c, dir.path() / "cores", {{"seed", 17}, {"solver", "awrtrd"}});
    const TRCores back = load_cores(dir.path() / "cores");
    EXPECT_EQ(back, c);
    EXPECT_EQ(tr_reconstruct(back), tr_reconstruct(c));
    const auto man = load_manifest(dir.path() / "cores");
    EXPECT_EQ(man.at("N"), 3);
    EXPECT_EQ(man.at("seed"), 17);
    EXPECT_EQ(man.at("provenance").at("solver"), "awrtrd");
    EXPECT_EQ(man.at("ranks"), nlohmann::json({2, 3, 2}));
}

TEST(Cores, TamperedManifestRejected) {
    TempDir dir;
    const TRCores c = oracle::random_cores({4, 3, 5}, {2, 3, 2}, 5);
    const fs::path d = dir.path() / "cores";
    save_cores(c, d);
    auto man = load_manifest(d);

    auto tampered = man;
    tampered["ranks"] = {2, 2, 2};
    dump(d / "manifest.json", tampered.dump());
    EXPECT_THROW(load_cores(d), IoError);

    tampered = man;
    tampered["N"] = 4;
    dump(d / "manifest.json", tampered.dump());
    EXPECT_THROW(load_cores(d), IoError);

    dump(d / "manifest.json", "{not json");
    EXPECT_THROW(load_cores(d), IoError);

    dump(d / "manifest.json", man.dump());
    write_tensor(oracle::random_tensor({2, 3, 3}, 1), d / "core_2.dten");
    EXPECT_THROW(load_cores(d), IoError);
}

TEST(Images, PpmRoundTripAndStacking) {
    TempDir dir;
    DenseTensor img(Shape{3, 4, 3});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(i % 256) / 255.0;
    write_ppm(img, dir.path() / "a.ppm");
    const DenseTensor one = ingest_image_stack({dir.path() / "a.ppm"});
    EXPECT_EQ(one.shape(), (Shape{3, 4, 3}));
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(one[i], img[i], 1e-12);

    std::vector<fs::path> frames;
    for (int f = 0; f < 5; ++f) {
        frames.push_back(dir.path() / ("f" + std::to_string(f) + ".ppm"));
        write_ppm(img, frames.back());
    }
    const DenseTensor stack = ingest_image_stack(frames);
    EXPECT_EQ(stack.shape(), (Shape{3, 4, 3, 5}));
    for (double v : stack.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }

    write_ppm(DenseTensor(Shape{2, 4, 3}), dir.path() / "small.ppm");
    EXPECT_THROW(ingest_image_stack({dir.path() / "a.ppm", dir.path() / "small.ppm"}), IoError);
    dump(dir.path() / "bad.ppm", "P3\n1 1\n255\n0 0 0\n");
    EXPECT_THROW(ingest_image_stack({dir.path() / "bad.ppm"}), IoError);
    EXPECT_THROW(ingest_image_stack({}), IoError);
}

TEST(Images, PpmPixelOrder) {
    TempDir dir;
    dump(dir.path() / "p.ppm", std::string("P6\n2 1\n255\n") + std::string("\x0a\x14\x1e\xff\x00\x80", 6));
    const DenseTensor x = ingest_image_stack({dir.path() / "p.ppm"});
    ASSERT_EQ(x.shape(), (Shape{1, 2, 3}));
    // (row 0, col 1, green)
    EXPECT_DOUBLE_EQ(x[0 + 1 * 1 + 2 * 1], 0.0);
    EXPECT_DOUBLE_EQ(x[0 + 1 * 0 + 2 * 2], 30.0 / 255.0);
    EXPECT_DOUBLE_EQ(x[0 + 1 * 1 + 2 * 0], 1.0);
}

TEST(Metrics, HeaderAndAppend) {
    TempDir dir;
    const fs::path p = dir.path() / "m.csv";
    SolverTrace t;
    for (int i = 0; i < 3; ++i) {
        IterationRecord r;
        r.iteration = static_cast<std::size_t>(i);
        r.sigma = 0.5;
        r.steps = {1.0, 2.0};
        r.sample_sizes = {{4, 2}, {2, 4}};
        r.psnr = 30.0 + i;
        t.iterations.push_back(r);
    }
    emit_metrics(t, p, "a");
    emit_metrics(t, p, "b");
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[0], metrics_header());
    EXPECT_EQ(lines[0], "run_id,iteration,objective,residual,sigma,e,ms,psnr,steps,sample_sizes");
    EXPECT_EQ(lines[1].substr(0, 4), "a,0,");
    EXPECT_EQ(lines[4].substr(0, 4), "b,0,");
    EXPECT_NE(lines[3].find(",32,1;2,4x2|2x4"), std::string::npos) << lines[3];
}
