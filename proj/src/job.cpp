#include "ods/job.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <set>

#include "ods/error.hpp"
#include "ods/eval.hpp"
#include "ods/io.hpp"

namespace ods {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::ValidationError, field + ": " + why);
}

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

void reject_unknown(const Json& obj, const std::string& prefix, std::initializer_list<const char*> known) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) invalid(join(prefix, key), "unknown field");
    }
}

const Json* member(const Json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

const Json& object_at(const Json& obj, const char* key, const std::string& prefix, bool required) {
    static const Json empty = Json::object();
    const Json* v = member(obj, key);
    if (!v) {
        if (required) invalid(join(prefix, key), "required");
        return empty;
    }
    if (!v->is_object()) invalid(join(prefix, key), "expected an object");
    return *v;
}

std::string string_at(const Json& obj, const char* key, const std::string& prefix, bool required) {
    const Json* v = member(obj, key);
    if (!v) {
        if (required) invalid(join(prefix, key), "required");
        return {};
    }
    if (!v->is_string()) invalid(join(prefix, key), "expected a string");
    const std::string s = v->get<std::string>();
    if (required && s.empty()) invalid(join(prefix, key), "must not be empty");
    return s;
}

std::optional<double> number_at(const Json& obj, const char* key, const std::string& prefix) {
    const Json* v = member(obj, key);
    if (!v) return std::nullopt;
    if (!v->is_number()) invalid(join(prefix, key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) invalid(join(prefix, key), "must be finite");
    return d;
}

std::optional<int> integer_at(const Json& obj, const char* key, const std::string& prefix) {
    const Json* v = member(obj, key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) invalid(join(prefix, key), "expected an integer");
    return v->get<int>();
}

void require_file(const JobConfig& job, const std::string& value, const std::string& field) {
    if (value.empty()) return;
    if (!fs::is_regular_file(job.resolve(value))) invalid(field, "file not found: " + job.resolve(value).string());
}

std::string derived_name(const std::string& path, const std::string& suffix) {
    const fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix + ".png")).string();
}

// Smooth, clearly structured background so composites are easy to inspect.
Rgba8 backdrop(double theta, double phi) {
    const double sky = std::clamp(0.5 + phi / kPi, 0.0, 1.0);
    const bool grid = std::fmod(std::abs(rad_to_deg(theta)) + 0.75, 15.0) < 1.5 ||
                      std::fmod(std::abs(rad_to_deg(phi)) + 0.75, 15.0) < 1.5;
    const double k = grid ? 0.8 : 1.0;
    return {static_cast<uint8_t>(std::lround(k * (60 + 80 * sky))), static_cast<uint8_t>(std::lround(k * (90 + 100 * sky))),
            static_cast<uint8_t>(std::lround(k * (70 + 170 * sky))), 255};
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - t0).count();
        t0 = now;
        return s;
    }
};

}  // namespace

fs::path JobConfig::resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

PlacementSpec JobConfig::placement_spec() const {
    PlacementSpec spec;
    if (placement.theta_deg) spec.theta = deg_to_rad(*placement.theta_deg);
    if (placement.phi_deg) spec.phi = deg_to_rad(*placement.phi_deg);
    spec.distance = placement.distance_m;
    spec.transform.scale = placement.scale;
    spec.transform.yaw = deg_to_rad(placement.yaw_deg);
    spec.transform.translation = placement.translation_m;
    spec.strategy = strategy;
    spec.key_columns = key_columns;
    spec.blend = blend;
    return spec;
}

bool JobConfig::operator==(const JobConfig& o) const {
    return source == o.source && target == o.target && output == o.output && placement == o.placement &&
           focal_px == o.focal_px && baseline_m == o.baseline_m && strategy == o.strategy && blend == o.blend &&
           segments == o.segments && key_columns == o.key_columns && neighbor_margin_deg == o.neighbor_margin_deg &&
           threads == o.threads;
}

JobConfig parse_job(const std::string& text, const fs::path& base_dir, bool check_files) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
    reject_unknown(root, "", {"source", "target", "output", "camera", "placement", "strategy", "blend", "segments",
                              "key_columns", "neighbor_margin_deg", "threads"});

    JobConfig job;
    job.base_dir = base_dir;

    const Json& src = object_at(root, "source", "", true);
    reject_unknown(src, "source", {"left", "disparity", "alpha"});
    job.source.left = string_at(src, "left", "source", true);
    job.source.disparity = string_at(src, "disparity", "source", true);
    job.source.alpha = string_at(src, "alpha", "source", false);

    const Json& tgt = object_at(root, "target", "", true);
    reject_unknown(tgt, "target", {"left", "right", "scene_depth"});
    job.target.left = string_at(tgt, "left", "target", true);
    job.target.right = string_at(tgt, "right", "target", true);
    job.target.scene_depth = string_at(tgt, "scene_depth", "target", false);

    const Json& out = object_at(root, "output", "", true);
    reject_unknown(out, "output", {"left", "right", "side_by_side", "anaglyph"});
    job.output.left = string_at(out, "left", "output", true);
    job.output.right = string_at(out, "right", "output", true);
    job.output.side_by_side = string_at(out, "side_by_side", "output", false);
    job.output.anaglyph = string_at(out, "anaglyph", "output", false);
    if (job.output.anaglyph.empty()) job.output.anaglyph = derived_name(job.output.left, "_anaglyph");

    const Json& cam = object_at(root, "camera", "", false);
    reject_unknown(cam, "camera", {"focal_px", "baseline_m"});
    job.focal_px = number_at(cam, "focal_px", "camera").value_or(kDefaultFocalPx);
    job.baseline_m = number_at(cam, "baseline_m", "camera").value_or(kDefaultBaselineM);
    if (!(job.focal_px > 0)) invalid("camera.focal_px", "must be > 0");
    if (!(job.baseline_m > 0)) invalid("camera.baseline_m", "must be > 0");

    const Json& pl = object_at(root, "placement", "", false);
    reject_unknown(pl, "placement", {"theta_deg", "phi_deg", "distance_m", "scale", "yaw_deg", "translation_m"});
    job.placement.theta_deg = number_at(pl, "theta_deg", "placement");
    job.placement.phi_deg = number_at(pl, "phi_deg", "placement");
    job.placement.distance_m = number_at(pl, "distance_m", "placement");
    job.placement.scale = number_at(pl, "scale", "placement").value_or(1.0);
    job.placement.yaw_deg = number_at(pl, "yaw_deg", "placement").value_or(0.0);
    if (const Json* t = member(pl, "translation_m")) {
        if (!t->is_array() || t->size() != 3 || !(*t)[0].is_number() || !(*t)[1].is_number() || !(*t)[2].is_number()) {
            invalid("placement.translation_m", "expected [x, y, z]");
        }
        job.placement.translation_m = {(*t)[0].get<double>(), (*t)[1].get<double>(), (*t)[2].get<double>()};
    }
    if (job.placement.theta_deg && std::abs(*job.placement.theta_deg) > 360.0) {
        invalid("placement.theta_deg", "must lie in [-360, 360]");
    }
    if (job.placement.phi_deg && std::abs(*job.placement.phi_deg) > 90.0) invalid("placement.phi_deg", "must lie in [-90, 90]");
    if (job.placement.distance_m && !(*job.placement.distance_m > 0)) invalid("placement.distance_m", "must be > 0");
    if (!(job.placement.scale > 0)) invalid("placement.scale", "must be > 0");

    if (const Json* s = member(root, "strategy")) {
        if (!s->is_string()) invalid("strategy", "expected a string");
        try {
            job.strategy = parse_strategy(s->get<std::string>());
        } catch (const Error& e) {
            invalid("strategy", e.detail());
        }
    }
    if (const Json* b = member(root, "blend")) {
        if (!b->is_string()) invalid("blend", "expected a string");
        try {
            job.blend = parse_blend(b->get<std::string>());
        } catch (const Error& e) {
            invalid("blend", e.detail());
        }
    }
    job.segments = integer_at(root, "segments", "").value_or(0);
    if (job.segments != 0 && job.segments < 3) invalid("segments", "must be >= 3");
    job.key_columns = integer_at(root, "key_columns", "").value_or(kDefaultKeyColumns);
    if (job.key_columns < 1 || job.key_columns % 2 == 0) invalid("key_columns", "must be odd and >= 1");
    job.neighbor_margin_deg = number_at(root, "neighbor_margin_deg", "").value_or(3.0);
    if (job.neighbor_margin_deg < 0 || job.neighbor_margin_deg > 45) {
        invalid("neighbor_margin_deg", "must lie in [0, 45]");
    }
    const int threads = integer_at(root, "threads", "").value_or(0);
    if (threads < 0) invalid("threads", "must be >= 0");
    job.threads = static_cast<unsigned>(threads);

    if (check_files) {
        require_file(job, job.source.left, "source.left");
        require_file(job, job.source.disparity, "source.disparity");
        require_file(job, job.source.alpha, "source.alpha");
        require_file(job, job.target.left, "target.left");
        require_file(job, job.target.right, "target.right");
        require_file(job, job.target.scene_depth, "target.scene_depth");
        if (job.segments == 0) {
            try {
                job.segments = png_size(job.resolve(job.target.left)).first;
            } catch (const Error& e) {
                invalid("target.left", e.detail());
            }
        }
    }
    return job;
}

JobConfig load_job(const fs::path& path) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return parse_job(read_file(path), dir);
}

std::string job_to_json(const JobConfig& job) {
    Json j;
    j["source"] = {{"left", job.source.left}, {"disparity", job.source.disparity}};
    if (!job.source.alpha.empty()) j["source"]["alpha"] = job.source.alpha;
    j["target"] = {{"left", job.target.left}, {"right", job.target.right}};
    if (!job.target.scene_depth.empty()) j["target"]["scene_depth"] = job.target.scene_depth;
    j["output"] = {{"left", job.output.left}, {"right", job.output.right}, {"anaglyph", job.output.anaglyph}};
    if (!job.output.side_by_side.empty()) j["output"]["side_by_side"] = job.output.side_by_side;
    j["camera"] = {{"focal_px", job.focal_px}, {"baseline_m", job.baseline_m}};
    Json pl = Json::object();
    if (job.placement.theta_deg) pl["theta_deg"] = *job.placement.theta_deg;
    if (job.placement.phi_deg) pl["phi_deg"] = *job.placement.phi_deg;
    if (job.placement.distance_m) pl["distance_m"] = *job.placement.distance_m;
    pl["scale"] = job.placement.scale;
    pl["yaw_deg"] = job.placement.yaw_deg;
    pl["translation_m"] = {job.placement.translation_m.x, job.placement.translation_m.y, job.placement.translation_m.z};
    j["placement"] = pl;
    j["strategy"] = to_string(job.strategy);
    j["blend"] = to_string(job.blend);
    if (job.segments > 0) j["segments"] = job.segments;
    j["key_columns"] = job.key_columns;
    j["neighbor_margin_deg"] = job.neighbor_margin_deg;
    j["threads"] = job.threads;
    return j.dump(2) + "\n";
}

void save_job(const fs::path& path, const JobConfig& job) { write_file_atomic(path, job_to_json(job)); }

int cli_compose(const JobConfig& job, std::ostream& log, std::ostream& err) {
    Stopwatch watch;
    auto fail = [&](const char* stage, const std::exception& e, int code) {
        err << stage << ": " << e.what() << '\n';
        return code;
    };

    PlanarImage left;
    DisparityMap disparity;
    Mask alpha;
    StereoEquirect target;
    std::optional<SceneDepth> scene_depth;
    try {
        left = read_png(job.resolve(job.source.left));
        disparity = DisparityMap(read_pfm(job.resolve(job.source.disparity)));
        if (!job.source.alpha.empty()) {
            const fs::path path = job.resolve(job.source.alpha);
            const Raster<Rgba8> matte = read_png(path);
            if (!matte.same_shape(left)) throw Error(ErrorCode::DimensionMismatch, path.string() + " differs in size from the source image");
            alpha = Mask(matte.width(), matte.height());
            for (size_t i = 0; i < matte.size(); ++i) alpha[i] = matte[i].r / 255.f;
        } else {
            alpha = alpha_from_image(left);
        }
        if (disparity.width() != left.width() || disparity.height() != left.height()) {
            throw Error(ErrorCode::DimensionMismatch,
                        job.resolve(job.source.disparity).string() + " differs in size from the source image");
        }
        for (const auto& [path, slot] : {std::pair{job.target.left, &target.left}, {job.target.right, &target.right}}) {
            const fs::path p = job.resolve(path);
            try {
                *slot = EquirectImage(read_png(p));
            } catch (const Error& e) {
                throw Error(e.code(), p.string() + ": " + e.detail());
            }
        }
        if (target.left.width() != target.right.width() || target.left.height() != target.right.height()) {
            throw Error(ErrorCode::DimensionMismatch, "target left and right differ in size");
        }
        if (!job.target.scene_depth.empty()) {
            const fs::path p = job.resolve(job.target.scene_depth);
            scene_depth = read_pfm(p);
            if (!scene_depth->same_shape(target.left)) {
                throw Error(ErrorCode::DimensionMismatch, p.string() + " differs in size from the target");
            }
        }
    } catch (const std::exception& e) {
        return fail("load", e, 2);
    }
    log << std::fixed << std::setprecision(3) << "load         " << watch.lap() << " s\n";

    ComposeResult result;
    try {
        CameraIntrinsics intr;
        intr.f = job.focal_px;
        intr.width = left.width();
        intr.height = left.height();
        StereoRig rig;
        rig.baseline = job.baseline_m;
        const SourceObject source = make_source_object(left, disparity, alpha, intr, rig);
        log << "reconstruct  " << watch.lap() << " s (" << source.cloud.size() << " points)\n";

        ComposeOptions options;
        options.rig = rig;
        options.segments = job.segments;
        options.neighbor_margin = deg_to_rad(job.neighbor_margin_deg);
        options.threads = job.threads;
        result = compose(target, source, job.placement_spec(), options, scene_depth ? &*scene_depth : nullptr);
    } catch (const std::exception& e) {
        return fail("compose", e, 3);
    }
    const StageTimings& t = result.timings;
    log << "compose      " << watch.lap() << " s (" << t.views << " views, " << to_string(job.strategy) << ")\n"
        << "  project    " << t.project_s << " s\n"
        << "  densify    " << t.densify_s << " s\n"
        << "  synthesize " << t.synthesize_s << " s\n"
        << "  render     " << t.render_s << " s\n"
        << "  composite  " << t.composite_s << " s\n";
    if (job.blend == BlendMode::Poisson) log << "  blend      " << t.blend_s << " s\n";

    try {
        write_png(job.resolve(job.output.left), result.image.left);
        write_png(job.resolve(job.output.right), result.image.right);
        write_png(job.resolve(job.output.anaglyph), anaglyph(result.image));
        if (!job.output.side_by_side.empty()) write_png(job.resolve(job.output.side_by_side), side_by_side(result.image));
    } catch (const std::exception& e) {
        return fail("write", e, 4);
    }
    log << "write        " << watch.lap() << " s\n";
    return 0;
}

fs::path make_fixture(const fs::path& dir, int pano_width) {
    if (pano_width < 16 || pano_width % 2) throw Error(ErrorCode::BadParams, "fixture width must be even and >= 16");
    fs::create_directories(dir);
    const int w = pano_width;
    const int h = w / 2;

    ChessboardParams params;
    params.rows = 6;
    params.cols = 8;
    params.distance = 2.0;
    params.hfov = deg_to_rad(60.0);
    const ChessboardScene board = make_chessboard(params);
    StereoRig rig;
    const double board_px = w * (board.cols * board.square_size / board.distance) / kTwoPi;
    const SyntheticCapture cap = capture_board(board, rig, static_cast<int>(std::ceil(2.0 * board_px)));
    write_png(dir / "object.png", cap.image);
    write_pfm(dir / "object_disparity.pfm", cap.disparity.values());
    Raster<Rgba8> matte(cap.alpha.width(), cap.alpha.height());
    for (size_t i = 0; i < matte.size(); ++i) {
        const auto v = static_cast<uint8_t>(std::lround(cap.alpha[i] * 255.f));
        matte[i] = {v, v, v, 255};
    }
    write_png(dir / "object_alpha.png", matte);

    // Distant backdrop seen identically by both eyes, with a near pillar that
    // occludes part of the object.
    const double pillar_lo = deg_to_rad(40.0);
    const double pillar_hi = deg_to_rad(46.0);
    EquirectImage pano(w, h);
    Raster<float> depth(w, h, 10.f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double theta = equirect_column_theta(x, w);
            const double phi = equirect_row_phi(y, h);
            pano(x, y) = backdrop(theta, phi);
            if (theta >= pillar_lo && theta < pillar_hi && std::abs(phi) < deg_to_rad(60.0)) {
                pano(x, y) = {150, 80, 40, 255};
                depth(x, y) = 1.5f;
            }
        }
    }
    write_png(dir / "target_left.png", pano);
    write_png(dir / "target_right.png", pano);
    write_pfm(dir / "target_depth.pfm", depth);

    JobConfig job;
    job.source = {"object.png", "object_disparity.pfm", "object_alpha.png"};
    job.target = {"target_left.png", "target_right.png", "target_depth.pfm"};
    job.output = {"out/left.png", "out/right.png", "out/side_by_side.png", "out/anaglyph.png"};
    job.focal_px = cap.intr.f;
    job.baseline_m = rig.baseline;
    job.placement.theta_deg = 30.0;
    job.placement.phi_deg = 10.0;
    job.placement.distance_m = 2.0;
    job.strategy = Strategy::PerColumn;
    const fs::path path = dir / "job.json";
    save_job(path, job);
    return path;
}

}  // namespace ods
