#include "microvol/cli.hpp"

#include <pthread.h>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "microvol/block_source.hpp"
#include "microvol/ds_block.hpp"
#include "microvol/encoder.hpp"
#include "microvol/errors.hpp"
#include "microvol/metrics.hpp"
#include "microvol/render.hpp"
#include "microvol/runtime.hpp"
#include "microvol/service.hpp"
#include "microvol/volume.hpp"

namespace microvol {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kStoreEnv = "MICROVOL_STORE";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(token, &used));
            if (used != token.size()) throw std::invalid_argument(token);
        } catch (const std::exception&) {
            throw UsageError(what + ": '" + text + "' is not a comma-separated number list");
        }
    }
    if (out.empty()) throw UsageError(what + " is empty");
    return out;
}

Vec3 parse_vec3(const std::string& text, const std::string& what) {
    const auto v = parse_numbers(text, what);
    if (v.size() == 1) return {v[0], v[0], v[0]};
    if (v.size() != 3) throw UsageError(what + " needs 1 or 3 values");
    return {v[0], v[1], v[2]};
}

Index3 parse_dims(std::string text, const std::string& what) {
    for (char& c : text) {
        if (c == 'x' || c == 'X') c = ',';
    }
    const Vec3 v = parse_vec3(text, what);
    Index3 d{};
    for (int a = 0; a < 3; ++a) {
        if (v[a] != std::floor(v[a]) || v[a] < 1 || v[a] > 1e6) throw UsageError(what + " must be positive integers");
        d[a] = static_cast<int>(v[a]);
    }
    return d;
}

fs::path sidecar_for(const fs::path& raw) { return fs::path(raw.string() + ".json"); }

// ---- shared option groups ---------------------------------------------------

struct ViewOptions {
    std::string pos = "2,1.5,2.5";
    std::string look_at = "0,0,0";
    std::string dir;
    std::string up = "0,1,0";
    double fov = 45.0;
    std::string pov_file;

    void add(CLI::App* app) {
        app->add_option("--pos", pos, "Camera position x,y,z in [-1,1] world units")->capture_default_str();
        app->add_option("--look-at", look_at, "Point the camera looks at (ignored with --dir)")->capture_default_str();
        app->add_option("--dir", dir, "View direction x,y,z (normalized)");
        app->add_option("--up", up, "Up vector x,y,z")->capture_default_str();
        app->add_option("--fov", fov, "Vertical field of view in degrees")->capture_default_str();
        app->add_option("--pov-file", pov_file, "JSON file with {pos, dir, up, fov}");
    }

    PointOfView pov() const {
        if (!pov_file.empty()) {
            std::ifstream in(pov_file);
            if (!in) throw IoError("cannot open " + pov_file);
            return pov_from_json(json::parse(in));
        }
        const Vec3 p = parse_vec3(pos, "--pos");
        if (dir.empty()) return PointOfView::look_at(p, parse_vec3(look_at, "--look-at"), parse_vec3(up, "--up"), fov);
        PointOfView v;
        v.position = p;
        v.direction = normalize(parse_vec3(dir, "--dir"));
        const Vec3 u = parse_vec3(up, "--up");
        v.up = normalize(u - v.direction * dot(u, v.direction));
        v.fov_y = fov;
        v.validate();
        return v;
    }
};

struct ImageOptions {
    int size = 512;
    int width = 0;
    int height = 0;
    double sample_distance = 1e-3;
    double o_max = 0.99;
    bool no_shading = false;
    std::string tf_file;
    std::string tf_preset = "bands";

    void add(CLI::App* app, int default_size = 512) {
        size = default_size;
        app->add_option("--size", size, "Square image size in pixels")->capture_default_str();
        app->add_option("--width", width, "Image width (overrides --size)");
        app->add_option("--height", height, "Image height (overrides --size)");
        app->add_option("--sample-distance", sample_distance, "Ray step in world units")->capture_default_str();
        app->add_option("--o-max", o_max, "Early-termination opacity threshold")->capture_default_str();
        app->add_flag("--no-shading", no_shading, "Disable gradient shading");
        app->add_option("--tf", tf_file, "Transfer function JSON file");
        app->add_option("--tf-preset", tf_preset, "Preset when no --tf: bands, opaque or ramp")->capture_default_str();
    }

    RenderParams params() const {
        RenderParams p;
        p.width = width > 0 ? width : size;
        p.height = height > 0 ? height : size;
        p.sample_distance = sample_distance;
        p.o_max = o_max;
        p.light.enabled = !no_shading;
        p.validate();
        return p;
    }

    TransferFunction transfer_function(const LODManifest& m) const {
        if (!tf_file.empty()) return TransferFunction::load(tf_file);
        double lo = m.value_range.first;
        double hi = m.value_range.second;
        if (!(hi > lo)) hi = lo + 1.0;
        return preset_transfer_function(tf_preset, lo, hi);
    }
};

std::vector<ResidentBlock> load_visible(const BlockSource& source, const PointOfView& pov, double aspect) {
    std::vector<ResidentBlock> out;
    for (const auto& a : select_visible(pov, source.manifest(), aspect)) out.push_back({a, source.load(a)});
    return out;
}

// ---- subcommands --------------------------------------------------------------

struct GenMl {
    std::string dims = "61";
    std::string min = "-1";
    std::string max = "1";
    double fm = kMlFrequency;
    double alpha = kMlAlpha;
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--dims", dims, "Samples per axis: N or NxNxN")->capture_default_str();
        app->add_option("--min", min, "Lower physical bound x,y,z (or one value)")->capture_default_str();
        app->add_option("--max", max, "Upper physical bound x,y,z (or one value)")->capture_default_str();
        app->add_option("--fm", fm, "Marschner-Lobb frequency f_M")->capture_default_str();
        app->add_option("--alpha", alpha, "Marschner-Lobb alpha")->capture_default_str();
        app->add_option("-o,--out", out, "Output raw file; the sidecar is <out>.json")->required();
    }

    int run(std::ostream& os) const {
        const Box3 bounds{parse_vec3(min, "--min"), parse_vec3(max, "--max")};
        const auto volume = sample_grid(marschner_lobb(fm, alpha), parse_dims(dims, "--dims"), bounds);
        write_raw(out, volume);
        write_sidecar(sidecar_for(out), volume);
        const auto [lo, hi] = volume.value_range();
        os << "wrote " << out << " (" << volume.dims()[0] << 'x' << volume.dims()[1] << 'x' << volume.dims()[2]
           << ", range [" << lo << ", " << hi << "])\n";
        return kExitOk;
    }
};

struct Encode {
    std::string input;
    std::string sidecar;
    std::string out;
    std::string backend = "mfa";
    int levels = 4;
    std::string micro = "65";
    int coarsest = 2;
    double error_bound = 1e-4;
    int degree = 2;
    int ghost = 1;
    int ncp = 0;
    bool pad = false;
    bool assume_monotone = false;
    std::string report;

    void add(CLI::App* app) {
        app->add_option("-i,--input", input, "Raw float32 volume")->required();
        app->add_option("--sidecar", sidecar, "Sidecar JSON (default <input>.json)");
        app->add_option("-o,--out", out, "Store directory")->required();
        app->add_option("--backend", backend, "mfa (adaptive), fam (fixed NCP) or ds (down-sampled)")
            ->capture_default_str()
            ->check(CLI::IsMember({"mfa", "fam", "ds"}));
        app->add_option("--levels", levels, "Detail levels")->capture_default_str()->check(CLI::Range(1, 12));
        app->add_option("--micro", micro, "Micro-block samples per axis: N or NxNxN")->capture_default_str();
        app->add_option("--coarsest", coarsest, "Blocks per axis at the coarsest level")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app->add_option("--error-bound", error_bound, "RMSE bound per block")->capture_default_str();
        app->add_option("--degree", degree, "B-spline degree")->capture_default_str()->check(CLI::Range(1, 7));
        app->add_option("--ghost", ghost, "DS ghost width (0 or 1)")->capture_default_str()->check(CLI::Range(0, 1));
        app->add_option("--ncp", ncp, "Control points per axis for fam (0 = micro-block edge)")->capture_default_str();
        app->add_flag("--pad", pad, "Edge-replicate the volume up to the nearest compatible dims");
        app->add_flag("--assume-monotone", assume_monotone, "Bisect the per-block NCP search");
        app->add_option("--report", report, "Write an encode summary JSON here");
    }

    int run(std::ostream& os) const {
        const SidecarInfo info = read_sidecar(sidecar.empty() ? sidecar_for(input) : fs::path(sidecar));
        ScalarVolume volume = read_raw(input, info.dims, info.bounds);
        HierarchySpec spec;
        spec.levels = levels;
        spec.micro_dims = parse_dims(micro, "--micro");
        spec.coarsest_blocks = coarsest;
        if (pad) {
            const Index3 target = padded_dims(volume.dims(), spec);
            if (target != volume.dims()) {
                os << "padding " << volume.dims()[0] << 'x' << volume.dims()[1] << 'x' << volume.dims()[2] << " -> "
                   << target[0] << 'x' << target[1] << 'x' << target[2] << '\n';
                volume = pad_edge_replicate(volume, target);
            }
        }
        validate_hierarchy(volume.dims(), spec);
        const std::size_t raw_bytes = volume.samples().size() * sizeof(float);

        json summary = {{"backend", backend}, {"raw_bytes", raw_bytes}};
        LODManifest manifest;
        if (backend == "ds") {
            const DsStore store = build_ds_store(volume, spec, ghost);
            write_ds_store(out, store);
            manifest = store.manifest;
            summary["predicted_ds_samples"] = predicted_ds_samples(volume.dims()[0], spec.finest_blocks_per_axis(), ghost);
        } else {
            EncodeResult result;
            if (backend == "fam") {
                result = fixed_ncp_encode(volume, spec, ncp, degree);
            } else {
                EncodeOptions opts;
                opts.error_bound = error_bound;
                opts.degree = degree;
                opts.assume_monotone = assume_monotone;
                result = cross_level_encode(volume, spec, opts);
            }
            write_mfa_store(out, result);
            manifest = result.manifest;
            for (const auto& w : result.warnings) os << "warning: " << w << '\n';
            summary["searched_blocks"] = result.searched_blocks;
            summary["total_blocks"] = result.total_blocks;
            summary["fits"] = result.fits;
            summary["warnings"] = result.warnings.size();
            os << "searched blocks   " << result.searched_blocks << " / " << result.total_blocks << '\n';
        }
        const double ratio = compression_ratio(manifest, raw_bytes);
        summary["store_bytes"] = manifest.total_bytes();
        summary["compression_ratio"] = ratio;
        os << "blocks            " << manifest.entries.size() << '\n'
           << "store bytes       " << manifest.total_bytes() << '\n'
           << "raw bytes         " << raw_bytes << '\n'
           << "compression ratio " << std::setprecision(4) << ratio << '\n';
        if (!report.empty()) {
            std::ofstream r(report);
            if (!r) throw IoError("cannot write " + report);
            r << summary.dump(2) << '\n';
        }
        return kExitOk;
    }
};

struct Render {
    std::string store;
    std::string out;
    bool serial = false;
    ViewOptions view;
    ImageOptions image;

    void add(CLI::App* app) {
        app->add_option("--store", store, "Store directory")->envname(kStoreEnv)->required();
        app->add_option("-o,--out", out, "Output PNG")->required();
        app->add_flag("--serial", serial, "Use the single-threaded reference renderer");
        view.add(app);
        image.add(app);
    }

    int run(std::ostream& os) const {
        const FileBlockStore source(store);
        const PointOfView pov = view.pov();
        const RenderParams params = image.params();
        const auto resident = load_visible(source, pov, static_cast<double>(params.width) / params.height);
        const TransferFunction tf = image.transfer_function(source.manifest());
        RenderStats stats;
        const Frame frame = serial ? render_serial(pov, resident, source.manifest(), tf, params, &stats)
                                   : render(pov, resident, source.manifest(), tf, params, &stats);
        write_png(out, frame);
        os << "wrote " << out << " (" << frame.width << 'x' << frame.height << ", " << resident.size()
           << " blocks, " << stats.samples << " samples)\n";
        return kExitOk;
    }
};

struct Replay {
    std::string store;
    std::string trajectory;
    std::string prefetch = "off";
    std::size_t capacity = 200;
    std::string csv;
    std::string json_out;
    std::string frames_dir;
    long io_delay_us = 0;
    ImageOptions image;

    void add(CLI::App* app) {
        app->add_option("--store", store, "Store directory")->envname(kStoreEnv)->required();
        app->add_option("-t,--trajectory", trajectory, "Trajectory JSON-lines file")->required();
        app->add_option("--prefetch", prefetch, "Predictor: off, static or linear")
            ->capture_default_str()
            ->check(CLI::IsMember({"off", "static", "linear"}));
        app->add_option("--cache-capacity", capacity, "Resident block limit")->capture_default_str();
        app->add_option("--csv", csv, "Per-frame timing CSV");
        app->add_option("--json", json_out, "Per-frame timing and summary JSON");
        app->add_option("--frames-dir", frames_dir, "Write every frame as PNG here");
        app->add_option("--io-delay-us", io_delay_us, "Artificial per-block load latency")->capture_default_str();
        image.add(app);
    }

    void flush(const std::vector<FrameTiming>& timings) const {
        if (!csv.empty()) write_timings_csv(csv, timings);
        if (!json_out.empty()) write_timings_json(json_out, timings);
    }

    int run(std::ostream& os) const {
        auto source = std::make_shared<FileBlockStore>(store);
        source->set_io_delay(std::chrono::microseconds(io_delay_us));
        const auto povs = read_trajectory(trajectory);
        RuntimeConfig config;
        config.cache_capacity = capacity;
        config.prefetch = parse_prefetch_mode(prefetch);
        config.render = image.params();
        if (!frames_dir.empty()) fs::create_directories(frames_dir);
        std::vector<FrameTiming> timings;
        try {
            replay(povs, source, image.transfer_function(source->manifest()), config,
                   [&](const RuntimeSession::Step& step) {
                       timings.push_back(step.timing);
                       if (!frames_dir.empty()) {
                           std::ostringstream name;
                           name << "frame_" << std::setw(5) << std::setfill('0') << step.timing.frame << ".png";
                           write_png(fs::path(frames_dir) / name.str(), step.frame);
                       }
                   });
        } catch (...) {
            flush(timings);
            throw;
        }
        flush(timings);
        const ReplaySummary s = summarize(timings);
        os << std::fixed << std::setprecision(3) << "frames            " << s.frames << '\n'
           << "mean caching ms   " << s.mean_caching_ms << '\n'
           << "mean rendering ms " << s.mean_rendering_ms << '\n'
           << "mean latency ms   " << s.mean_latency_ms << '\n'
           << "misses / queries  " << s.misses << " / " << (s.hits + s.misses) << '\n'
           << std::setprecision(4) << "miss rate         " << s.miss_rate << '\n'
           << "prefetch loads    " << s.prefetch_loads << '\n';
        return kExitOk;
    }
};

struct Compare {
    std::string mfa;
    std::string ds;
    double fm = kMlFrequency;
    double alpha = kMlAlpha;
    std::string trajectory;
    std::string sample_distances = "0.02,0.01,0.005";
    std::string json_out;
    std::string frames_dir;
    ViewOptions view;
    ImageOptions image;

    void add(CLI::App* app) {
        app->add_option("--mfa", mfa, "MFA store");
        app->add_option("--ds", ds, "DS store");
        app->add_option("--fm", fm, "Ground-truth Marschner-Lobb f_M")->capture_default_str();
        app->add_option("--alpha", alpha, "Ground-truth Marschner-Lobb alpha")->capture_default_str();
        app->add_option("-t,--trajectory", trajectory, "POV set (JSON lines); default is the single --pos view");
        app->add_option("--sample-distances", sample_distances, "Comma-separated ray steps")->capture_default_str();
        app->add_option("--json", json_out, "Write the report JSON here");
        app->add_option("--frames-dir", frames_dir, "Write every rendered frame as PNG here");
        view.add(app);
        image.add(app, 256);
    }

    int run(std::ostream& os) const {
        if (mfa.empty() && ds.empty()) throw UsageError("compare needs --mfa and/or --ds");
        std::vector<std::pair<std::string, std::shared_ptr<FileBlockStore>>> stores;
        if (!mfa.empty()) stores.emplace_back("mfa", std::make_shared<FileBlockStore>(mfa));
        if (!ds.empty()) stores.emplace_back("ds", std::make_shared<FileBlockStore>(ds));
        const LODManifest& ref = stores.front().second->manifest();
        for (const auto& [name, s] : stores) {
            if (s->manifest().volume_bounds != ref.volume_bounds) {
                throw ValidationError("stores cover different physical bounds");
            }
        }
        const std::vector<PointOfView> povs =
            trajectory.empty() ? std::vector<PointOfView>{view.pov()} : read_trajectory(trajectory);
        if (povs.empty()) throw FormatError("trajectory is empty");
        const TransferFunction tf = image.transfer_function(ref);
        const AnalyticField field = marschner_lobb(fm, alpha);
        if (!frames_dir.empty()) fs::create_directories(frames_dir);

        DatasetReport report;
        report.name = "ml";
        for (const double sd : parse_numbers(sample_distances, "--sample-distances")) {
            RenderParams params = image.params();
            params.sample_distance = sd;
            params.validate();
            const double aspect = static_cast<double>(params.width) / params.height;
            std::vector<Frame> truth;
            for (const auto& pov : povs) truth.push_back(render_ground_truth(pov, field, ref.volume_bounds, tf, params));
            for (const auto& [name, source] : stores) {
                QualityRow row{name, sd, source->manifest().total_bytes(), 0.0, 0.0, 0.0};
                for (std::size_t i = 0; i < povs.size(); ++i) {
                    const Frame f = render(povs[i], load_visible(*source, povs[i], aspect), source->manifest(), tf, params);
                    row.mse += image_mse(truth[i], f);
                    row.ssim += image_ssim(truth[i], f);
                    if (!frames_dir.empty()) {
                        std::ostringstream stem;
                        stem << name << "_sd" << sd << "_pov" << i;
                        write_png(fs::path(frames_dir) / (stem.str() + ".png"), f);
                        write_png(fs::path(frames_dir) / ("truth_sd" + std::to_string(sd) + "_pov" + std::to_string(i) + ".png"),
                                  truth[i]);
                    }
                }
                row.mse /= static_cast<double>(povs.size());
                row.ssim /= static_cast<double>(povs.size());
                row.psnr = psnr_from_mse(row.mse);
                report.quality.push_back(row);
            }
        }
        os << report_table({report});
        if (!json_out.empty()) {
            std::ofstream out(json_out);
            if (!out) throw IoError("cannot write " + json_out);
            out << report_json({report}).dump(2) << '\n';
        }
        return kExitOk;
    }
};

struct Serve {
    std::string store;
    std::string address = "127.0.0.1";
    unsigned short port = 8080;
    std::size_t max_sessions = 8;
    int io_threads = 2;
    long io_delay_us = 0;
    std::size_t capacity = 200;
    std::string prefetch = "linear";
    ImageOptions image;

    void add(CLI::App* app) {
        app->add_option("--store", store, "Default store directory")->envname(kStoreEnv)->required();
        app->add_option("--address", address, "Bind address")->capture_default_str();
        app->add_option("--port", port, "TCP port (0 = any free port)")->capture_default_str();
        app->add_option("--max-sessions", max_sessions, "Concurrent session limit")->capture_default_str();
        app->add_option("--io-threads", io_threads, "Network threads")->capture_default_str();
        app->add_option("--io-delay-us", io_delay_us, "Artificial per-block load latency")->capture_default_str();
        app->add_option("--cache-capacity", capacity, "Default per-session cache capacity")->capture_default_str();
        app->add_option("--prefetch", prefetch, "Default predictor: off, static or linear")
            ->capture_default_str()
            ->check(CLI::IsMember({"off", "static", "linear"}));
        image.add(app);
    }

    int run(std::ostream& os) const {
        ServiceConfig config;
        config.store = store;
        config.address = address;
        config.port = port;
        config.max_sessions = max_sessions;
        config.io_threads = io_threads;
        config.io_delay = std::chrono::microseconds(io_delay_us);
        config.runtime.cache_capacity = capacity;
        config.runtime.prefetch = parse_prefetch_mode(prefetch);
        config.runtime.render = image.params();
        const FileBlockStore probe(store);
        config.transfer_function = image.transfer_function(probe.manifest());

        // Block termination signals in every thread, then wait for one here.
        sigset_t signals;
        sigemptyset(&signals);
        sigaddset(&signals, SIGINT);
        sigaddset(&signals, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &signals, nullptr);
        RenderService service(config);
        const unsigned short bound = service.start();
        os << "listening on http://" << address << ':' << bound << std::endl;
        int received = 0;
        sigwait(&signals, &received);
        os << "stopping\n";
        service.stop();
        pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
        return kExitOk;
    }
};

struct GenTrajectory {
    std::size_t count = 100;
    double radius = 1.4;
    double elevation = 20.0;
    double turns = 1.0;
    double fov = 45.0;
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--count", count, "Number of POVs")->capture_default_str();
        app->add_option("--radius", radius, "Orbit radius in world units")->capture_default_str();
        app->add_option("--elevation", elevation, "Orbit elevation in degrees")->capture_default_str();
        app->add_option("--turns", turns, "Revolutions over the trajectory")->capture_default_str();
        app->add_option("--fov", fov, "Vertical field of view in degrees")->capture_default_str();
        app->add_option("-o,--out", out, "Output JSON-lines file")->required();
    }

    int run(std::ostream& os) const {
        const auto povs = orbit_trajectory(count, radius, elevation, turns, {}, fov);
        write_trajectory(out, povs);
        os << "wrote " << povs.size() << " POVs to " << out << '\n';
        return kExitOk;
    }
};

// Turns {"key": value} pairs into "--key value" arguments.
std::vector<std::string> config_arguments(const json& obj) {
    std::vector<std::string> args;
    for (const auto& [key, value] : obj.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) {
                if (!joined.empty()) joined += ',';
                joined += v.is_string() ? v.get<std::string>() : v.dump();
            }
            args.push_back(flag);
            args.push_back(joined);
        } else if (value.is_string()) {
            args.push_back(flag);
            args.push_back(value.get<std::string>());
        } else if (value.is_number()) {
            args.push_back(flag);
            args.push_back(value.dump());
        } else {
            throw UsageError("config key '" + key + "' must be a scalar, boolean or array");
        }
    }
    return args;
}

// Splices arguments from a --config JSON file in right after the subcommand
// name, so flags given on the command line take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args, const std::vector<std::string>& subcommands) {
    std::optional<std::string> config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!config_path) return args;
    std::ifstream in(*config_path);
    if (!in) throw IoError("cannot open config " + *config_path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(*config_path + ": " + e.what());
    }
    if (!cfg.is_object()) throw FormatError(*config_path + ": config must be a JSON object");
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (std::find(subcommands.begin(), subcommands.end(), args[i]) == subcommands.end()) continue;
        const json section = cfg.contains(args[i]) && cfg.at(args[i]).is_object() ? cfg.at(args[i]) : [&] {
            json flat = json::object();
            for (const auto& [k, v] : cfg.items()) {
                if (std::find(subcommands.begin(), subcommands.end(), k) == subcommands.end()) flat[k] = v;
            }
            return flat;
        }();
        const auto extra = config_arguments(section);
        args.insert(args.begin() + static_cast<std::ptrdiff_t>(i) + 1, extra.begin(), extra.end());
        break;
    }
    return args;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-resolution B-spline volume encoding, rendering and replay", "microvol"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", "microvol 1.0.0");
    std::string config_unused;
    app.add_option("--config", config_unused, "JSON file whose keys stand in for flags");

    GenMl gen_ml;
    Encode encode;
    Render render_cmd;
    Replay replay_cmd;
    Compare compare;
    Serve serve;
    GenTrajectory gen_traj;
    gen_ml.add(app.add_subcommand("gen-ml", "Sample a Marschner-Lobb volume"));
    encode.add(app.add_subcommand("encode", "Partition and encode a volume into a store"));
    render_cmd.add(app.add_subcommand("render", "Render one POV from a store to PNG"));
    replay_cmd.add(app.add_subcommand("replay", "Replay a trajectory through the cache and prefetcher"));
    compare.add(app.add_subcommand("compare", "MSE/PSNR/SSIM of store renders against the analytic field"));
    serve.add(app.add_subcommand("serve", "Run the HTTP/WebSocket render service"));
    gen_traj.add(app.add_subcommand("gen-trajectory", "Write an orbit trajectory"));
    const std::vector<std::string> names{"gen-ml", "encode", "render", "replay", "compare", "serve", "gen-trajectory"};

    try {
        std::vector<std::string> args(argv, argv + argc);
        args = expand_config(std::move(args), names);
        std::vector<const char*> ptrs;
        for (const auto& a : args) ptrs.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(ptrs.size()), ptrs.data());
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e, out, err);
            return code == 0 ? kExitOk : kExitUsage;
        }
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "gen-ml") return gen_ml.run(out);
        if (cmd == "encode") return encode.run(out);
        if (cmd == "render") return render_cmd.run(out);
        if (cmd == "replay") return replay_cmd.run(out);
        if (cmd == "compare") return compare.run(out);
        if (cmd == "serve") return serve.run(out);
        if (cmd == "gen-trajectory") return gen_traj.run(out);
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const CapacityError& e) {
        err << "capacity error: " << e.what() << '\n';
        return kExitCapacity;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace microvol
