// odscomp: compose a stereo-captured object into a stereo 360 panorama.

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <json.hpp>

#include "ods/densify.hpp"
#include "ods/error.hpp"
#include "ods/eval.hpp"
#include "ods/io.hpp"
#include "ods/job.hpp"
#include "ods/service.hpp"

namespace {

ods::Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

struct ComposeFlags {
    std::string config;
    std::string source_left, source_disparity, source_alpha;
    std::string target_left, target_right, scene_depth;
    std::string out_left, out_right, out_sbs, out_anaglyph;
    std::optional<double> focal_px, baseline_m;
    std::optional<double> theta_deg, phi_deg, distance_m, scale, yaw_deg;
    std::optional<std::string> strategy, blend;
    std::optional<int> segments, key_columns;
    std::optional<double> neighbor_margin_deg;
    std::optional<unsigned> threads;
};

// Builds the job JSON from --config (if any) with command-line overrides on top.
nlohmann::ordered_json merged_job(const ComposeFlags& f, std::filesystem::path& base_dir) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    if (!f.config.empty()) {
        j = nlohmann::ordered_json::parse(ods::read_file(f.config));
        const std::filesystem::path p(f.config);
        base_dir = p.has_parent_path() ? p.parent_path() : std::filesystem::path(".");
    }
    // Paths given on the command line are relative to the working directory.
    auto path = [&](const std::string& v) {
        return base_dir.empty() ? v : std::filesystem::absolute(v).string();
    };
    auto set_str = [&](const char* obj, const char* key, const std::string& v) {
        if (!v.empty()) j[obj][key] = path(v);
    };
    set_str("source", "left", f.source_left);
    set_str("source", "disparity", f.source_disparity);
    set_str("source", "alpha", f.source_alpha);
    set_str("target", "left", f.target_left);
    set_str("target", "right", f.target_right);
    set_str("target", "scene_depth", f.scene_depth);
    set_str("output", "left", f.out_left);
    set_str("output", "right", f.out_right);
    set_str("output", "side_by_side", f.out_sbs);
    set_str("output", "anaglyph", f.out_anaglyph);
    if (f.focal_px) j["camera"]["focal_px"] = *f.focal_px;
    if (f.baseline_m) j["camera"]["baseline_m"] = *f.baseline_m;
    if (f.theta_deg) j["placement"]["theta_deg"] = *f.theta_deg;
    if (f.phi_deg) j["placement"]["phi_deg"] = *f.phi_deg;
    if (f.distance_m) j["placement"]["distance_m"] = *f.distance_m;
    if (f.scale) j["placement"]["scale"] = *f.scale;
    if (f.yaw_deg) j["placement"]["yaw_deg"] = *f.yaw_deg;
    if (f.strategy) j["strategy"] = *f.strategy;
    if (f.blend) j["blend"] = *f.blend;
    if (f.segments) j["segments"] = *f.segments;
    if (f.key_columns) j["key_columns"] = *f.key_columns;
    if (f.neighbor_margin_deg) j["neighbor_margin_deg"] = *f.neighbor_margin_deg;
    if (f.threads) j["threads"] = *f.threads;
    return j;
}

int run_compose(const ComposeFlags& flags) {
    ods::JobConfig job;
    try {
        std::filesystem::path base_dir;
        const auto j = merged_job(flags, base_dir);
        job = ods::parse_job(j.dump(), base_dir);
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << '\n';
        return 2;
    }
    return ods::cli_compose(job, std::cout, std::cerr);
}

std::vector<ods::Strategy> parse_strategies(const std::vector<std::string>& names) {
    std::vector<ods::Strategy> out;
    for (const auto& n : names) out.push_back(ods::parse_strategy(n));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Insert stereo-captured objects into stereo 360 panoramas"};
    app.require_subcommand(1);

    ComposeFlags cf;
    auto* compose = app.add_subcommand("compose", "Run a composition job");
    compose->add_option("--config", cf.config, "Job config (JSON)");
    compose->add_option("--source-left", cf.source_left, "Object image (PNG)");
    compose->add_option("--source-disparity", cf.source_disparity, "Object disparity (PFM, px)");
    compose->add_option("--source-alpha", cf.source_alpha, "Object matte (PNG)");
    compose->add_option("--target-left", cf.target_left, "Left panorama (PNG)");
    compose->add_option("--target-right", cf.target_right, "Right panorama (PNG)");
    compose->add_option("--scene-depth", cf.scene_depth, "Panorama distances (PFM, m)");
    compose->add_option("--out-left", cf.out_left);
    compose->add_option("--out-right", cf.out_right);
    compose->add_option("--out-sbs", cf.out_sbs);
    compose->add_option("--out-anaglyph", cf.out_anaglyph);
    compose->add_option("--focal-px", cf.focal_px);
    compose->add_option("--baseline-m", cf.baseline_m);
    compose->add_option("--theta-deg", cf.theta_deg);
    compose->add_option("--phi-deg", cf.phi_deg);
    compose->add_option("--distance-m", cf.distance_m);
    compose->add_option("--scale", cf.scale);
    compose->add_option("--yaw-deg", cf.yaw_deg);
    compose->add_option("--strategy", cf.strategy, "per-column | key-column | one-off");
    compose->add_option("--blend", cf.blend, "overwrite | poisson");
    compose->add_option("--segments", cf.segments, "Per-column interval count (default: target width)");
    compose->add_option("--key-columns", cf.key_columns, "Columns per key column (odd)");
    compose->add_option("--neighbor-margin-deg", cf.neighbor_margin_deg);
    compose->add_option("--threads", cf.threads);

    ods::EvalConfig ec;
    std::vector<std::string> strategy_names{"per-column", "key-column", "one-off"};
    std::vector<double> phis;
    double theta_deg = 0.0;
    std::string csv_path, md_path;
    auto* eval = app.add_subcommand("eval", "Chessboard disparity evaluation");
    eval->add_option("--width", ec.width, "Panorama width")->capture_default_str();
    eval->add_option("--strategies", strategy_names)->capture_default_str();
    eval->add_option("--theta-deg", theta_deg)->capture_default_str();
    eval->add_option("--phi-deg", phis, "Elevations (default -70 -35 0 35 70)");
    eval->add_option("--key-columns", ec.key_columns)->capture_default_str();
    eval->add_option("--distance-m", ec.board.distance)->capture_default_str();
    eval->add_option("--csv", csv_path, "Write the CSV report here");
    eval->add_option("--markdown", md_path, "Write the markdown table here");
    eval->add_option("--threads", ec.threads);

    std::string densify_in, densify_out, densify_mask;
    int max_iters = ods::kDefaultMaxFillIterations;
    auto* densify = app.add_subcommand("densify", "Densify a sparse depth map (PFM, <= 0 = missing)");
    densify->add_option("--input", densify_in)->required();
    densify->add_option("--output", densify_out)->required();
    densify->add_option("--mask", densify_mask, "Write the soft mask as PNG");
    densify->add_option("--max-iters", max_iters)->capture_default_str();

    int port = 8080;
    std::string host = "0.0.0.0";
    ods::ServiceOptions so;
    if (const char* env = std::getenv("PORT")) port = std::atoi(env);
    auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
    serve->add_option("--port", port, "Port (default $PORT or 8080)");
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--output-dir", so.output_dir)->capture_default_str();
    serve->add_option("--input-dir", so.input_dir);
    serve->add_option("--threads", so.threads);

    std::string fixture_dir;
    int fixture_width = 512;
    auto* fixture = app.add_subcommand("make-fixture", "Write a small chessboard job for trying things out");
    fixture->add_option("--dir", fixture_dir)->required();
    fixture->add_option("--width", fixture_width)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*compose) return run_compose(cf);
        if (*eval) {
            ec.strategies = parse_strategies(strategy_names);
            for (const double p : phis) ec.positions.push_back({ods::deg_to_rad(theta_deg), ods::deg_to_rad(p)});
            if (phis.empty() && theta_deg != 0.0) {
                for (auto pos : ods::default_eval_positions()) {
                    pos.theta = ods::deg_to_rad(theta_deg);
                    ec.positions.push_back(pos);
                }
            }
            const ods::EvalReport report = ods::run_eval(ec);
            std::cout << report.csv() << '\n' << report.markdown();
            std::cout << "total " << report.seconds << " s\n";
            if (!csv_path.empty()) ods::write_file_atomic(csv_path, report.csv());
            if (!md_path.empty()) ods::write_file_atomic(md_path, report.markdown());
            return 0;
        }
        if (*densify) {
            const ods::Raster<float> in = ods::read_pfm(densify_in);
            ods::DepthMap sparse(in.width(), in.height());
            for (size_t i = 0; i < in.size(); ++i) {
                if (std::isfinite(in[i]) && in[i] > 0.f) sparse.set(i, in[i]);
            }
            const ods::DenseResult dense = ods::densify(sparse, max_iters);
            ods::Raster<float> out(in.width(), in.height(), -1.f);
            for (size_t i = 0; i < out.size(); ++i) {
                if (dense.depth.valid(i)) out[i] = dense.depth.depth(i);
            }
            ods::write_pfm(densify_out, out);
            if (!densify_mask.empty()) {
                ods::Raster<ods::Rgba8> m(out.width(), out.height());
                for (size_t i = 0; i < m.size(); ++i) {
                    const auto v = static_cast<uint8_t>(std::lround(dense.mask[i] * 255.f));
                    m[i] = {v, v, v, 255};
                }
                ods::write_png(densify_mask, m);
            }
            std::cout << "filled " << dense.depth.valid_count() - sparse.valid_count() << " of "
                      << dense.depth.size() << " pixels\n";
            return 0;
        }
        if (*serve) {
            ods::Service service(so);
            const int bound = service.bind(host, port);
            if (bound < 0) {
                std::cerr << "cannot bind " << host << ":" << port << '\n';
                return 1;
            }
            g_service = &service;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on " << host << ":" << bound << std::endl;
            service.listen();
            g_service = nullptr;
            return 0;
        }
        if (*fixture) {
            std::cout << ods::make_fixture(fixture_dir, fixture_width).string() << '\n';
            return 0;
        }
    } catch (const ods::Error& e) {
        std::cerr << e.what() << '\n';
        return e.code() == ods::ErrorCode::IoError || e.code() == ods::ErrorCode::ParseError ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
