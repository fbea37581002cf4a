#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "microvol/frame.hpp"
#include "microvol/runtime.hpp"

namespace microvol {

/// Mean squared error over the RGB channels on a [0,1] scale. Alpha is ignored.
double image_mse(const Frame& a, const Frame& b);
/// 10 log10(1 / MSE); +infinity for identical frames.
double image_psnr(const Frame& a, const Frame& b);
double psnr_from_mse(double mse);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Rec. 601 luminance in [0,1], row-major.
std::vector<double> luminance(const Frame& frame);

/// Single-scale SSIM of luminance with a Gaussian window, averaged over the
/// window positions that fit inside the image.
double image_ssim(const Frame& a, const Frame& b, const SsimOptions& options = {});
double ssim(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
            const SsimOptions& options = {});

struct QualityRow {
    std::string backend;
    double sample_distance = 0.0;
    std::size_t storage_bytes = 0;
    double mse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct DatasetReport {
    std::string name;
    std::optional<double> compression_ratio;
    std::optional<std::size_t> searched_blocks;
    std::optional<std::size_t> total_blocks;
    std::vector<FrameTiming> timings;
    std::vector<QualityRow> quality;
};

/// Machine-readable form. Means are null when there are no timing rows and
/// infinite PSNR is written as the string "inf".
nlohmann::json report_json(const std::vector<DatasetReport>& datasets);
/// Fixed-width text tables for humans.
std::string report_table(const std::vector<DatasetReport>& datasets);

}  // namespace microvol
