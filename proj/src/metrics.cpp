#include "microvol/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "microvol/errors.hpp"

namespace microvol {

namespace {

void check_same_size(const Frame& a, const Frame& b) {
    if (a.width != b.width || a.height != b.height) {
        throw DomainError("frames differ in size: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                          " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
    }
    if (a.width <= 0 || a.height <= 0) throw DomainError("frames are empty");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(static_cast<std::size_t>(size));
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        k[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Valid-mode separable filtering: output is (w-n+1) x (h-n+1).
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * img[static_cast<std::size_t>(y) * w + x + i];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[static_cast<std::size_t>(i)] * rows[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

nlohmann::json finite_or_string(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace

double image_mse(const Frame& a, const Frame& b) {
    check_same_size(a, b);
    double sum = 0.0;
    const std::size_t pixels = static_cast<std::size_t>(a.width) * a.height;
    for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < 3; ++c) {
            const double d = (a.rgba[p * 4 + c] - b.rgba[p * 4 + c]) / 255.0;
            sum += d * d;
        }
    }
    return sum / (3.0 * static_cast<double>(pixels));
}

double psnr_from_mse(double mse) {
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double image_psnr(const Frame& a, const Frame& b) { return psnr_from_mse(image_mse(a, b)); }

std::vector<double> luminance(const Frame& frame) {
    std::vector<double> y(static_cast<std::size_t>(frame.width) * frame.height);
    for (std::size_t p = 0; p < y.size(); ++p) {
        y[p] = (0.299 * frame.rgba[p * 4] + 0.587 * frame.rgba[p * 4 + 1] + 0.114 * frame.rgba[p * 4 + 2]) / 255.0;
    }
    return y;
}

double ssim(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
            const SsimOptions& o) {
    if (a.size() != b.size() || a.size() != static_cast<std::size_t>(width) * height) {
        throw DomainError("SSIM inputs differ in size");
    }
    if (width < o.window || height < o.window) {
        throw DomainError("SSIM needs images of at least " + std::to_string(o.window) + " pixels per side");
    }
    const auto k = gaussian_kernel(o.window, o.sigma);
    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, width, height, k);
    const auto mu_b = filter_valid(b, width, height, k);
    const auto e_aa = filter_valid(aa, width, height, k);
    const auto e_bb = filter_valid(bb, width, height, k);
    const auto e_ab = filter_valid(ab, width, height, k);
    const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
    const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double va = e_aa[i] - ma * ma;
        const double vb = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return sum / static_cast<double>(mu_a.size());
}

double image_ssim(const Frame& a, const Frame& b, const SsimOptions& options) {
    check_same_size(a, b);
    return ssim(luminance(a), luminance(b), a.width, a.height, options);
}

nlohmann::json report_json(const std::vector<DatasetReport>& datasets) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& d : datasets) {
        const ReplaySummary s = summarize(d.timings);
        nlohmann::json timing = {{"n", s.frames}};
        const auto mean = [&](double v) { return s.frames ? nlohmann::json(v) : nlohmann::json(nullptr); };
        timing["mean_caching_ms"] = mean(s.mean_caching_ms);
        timing["mean_rendering_ms"] = mean(s.mean_rendering_ms);
        timing["mean_latency_ms"] = mean(s.mean_latency_ms);
        timing["miss_rate"] = mean(s.miss_rate);
        timing["hits"] = s.hits;
        timing["misses"] = s.misses;
        timing["prefetch_loads"] = s.prefetch_loads;

        nlohmann::json quality = nlohmann::json::array();
        for (const auto& q : d.quality) {
            quality.push_back({{"backend", q.backend},
                               {"sample_distance", q.sample_distance},
                               {"storage_bytes", q.storage_bytes},
                               {"mse", q.mse},
                               {"psnr", finite_or_string(q.psnr)},
                               {"ssim", q.ssim}});
        }
        const auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
        nlohmann::json searches_saved = nullptr;
        if (d.searched_blocks && d.total_blocks) searches_saved = *d.total_blocks - *d.searched_blocks;
        out.push_back({{"dataset", d.name},
                       {"compression_ratio", opt(d.compression_ratio)},
                       {"searched_blocks", opt(d.searched_blocks)},
                       {"total_blocks", opt(d.total_blocks)},
                       {"searches_saved", searches_saved},
                       {"timing", timing},
                       {"quality", quality}});
    }
    return {{"datasets", out}};
}

std::string report_table(const std::vector<DatasetReport>& datasets) {
    std::ostringstream os;
    os << std::fixed;
    for (const auto& d : datasets) {
        const ReplaySummary s = summarize(d.timings);
        os << "dataset " << d.name << '\n';
        if (d.compression_ratio) os << "  compression ratio   " << std::setprecision(3) << *d.compression_ratio << '\n';
        if (d.searched_blocks && d.total_blocks) {
            os << "  searched blocks     " << *d.searched_blocks << " / " << *d.total_blocks << '\n';
        }
        os << "  frames              " << s.frames << '\n';
        if (s.frames) {
            os << std::setprecision(3) << "  mean caching ms     " << s.mean_caching_ms << '\n'
               << "  mean rendering ms   " << s.mean_rendering_ms << '\n'
               << "  mean latency ms     " << s.mean_latency_ms << '\n'
               << std::setprecision(4) << "  miss rate           " << s.miss_rate << '\n';
        }
        if (!d.quality.empty()) {
            os << "  " << std::left << std::setw(14) << "backend" << std::right << std::setw(12) << "sample_dist"
               << std::setw(12) << "bytes" << std::setw(14) << "mse" << std::setw(10) << "psnr" << std::setw(10)
               << "ssim" << '\n';
            for (const auto& q : d.quality) {
                os << "  " << std::left << std::setw(14) << q.backend << std::right << std::setprecision(5)
                   << std::setw(12) << q.sample_distance << std::setw(12) << q.storage_bytes << std::scientific
                   << std::setprecision(3) << std::setw(14) << q.mse << std::fixed << std::setprecision(3)
                   << std::setw(10) << q.psnr << std::setprecision(5) << std::setw(10) << q.ssim << '\n';
            }
        }
    }
    return os.str();
}

}  // namespace microvol
