#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "rtr/solver.hpp"
#include "rtr/tensor.hpp"
#include "rtr/tr_cores.hpp"

namespace rtr {

/// Malformed or unreadable file, or an output that could not be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Binary layout shared by .dten and .dmask:
//   "DTEN" | u16 version | u16 N | N x u64 dims | payload
// .dten payload: little-endian f64 in mode-1-fastest order; .dmask: one byte (0/1) per entry.
inline constexpr char kTensorMagic[4] = {'D', 'T', 'E', 'N'};
inline constexpr std::uint16_t kTensorVersion = 1;

void write_tensor(const DenseTensor& x, const std::filesystem::path& path);
DenseTensor read_tensor(const std::filesystem::path& path);

void write_mask(const ObservationMask& p, const std::filesystem::path& path);
ObservationMask read_mask(const std::filesystem::path& path);

/// Extra manifest fields (seed, solver, ...) stored under "provenance".
void save_cores(const TRCores& cores, const std::filesystem::path& dir,
                const nlohmann::json& provenance = nlohmann::json::object());
TRCores load_cores(const std::filesystem::path& dir);
nlohmann::json load_manifest(const std::filesystem::path& dir);

/**
 * Reads 8-bit PNG or binary PPM (P6) images into an H x W x 3 tensor (one
 * image) or H x W x 3 x F tensor (F frames), values divided by 255.
 */
DenseTensor ingest_image_stack(const std::vector<std::filesystem::path>& paths);

struct Rgb8Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;  // row-major, interleaved RGB
};

Rgb8Image read_image(const std::filesystem::path& path);
/// Writes a binary PPM; values are clamped to [0, 1] and scaled to 8 bits.
void write_ppm(const DenseTensor& rgb, const std::filesystem::path& path, std::size_t frame = 0);

/// Header row of the per-iteration metrics CSV.
std::string metrics_header();

/// Appends one row per iteration; the header is written only when the file is new or empty.
void emit_metrics(const SolverTrace& trace, const std::filesystem::path& path,
                  const std::string& run_id);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace rtr
