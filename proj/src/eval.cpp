#include "ods/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "ods/error.hpp"
#include "ods/parallel.hpp"

namespace ods {

namespace {

constexpr Rgba8 kDark{20, 20, 20, 255};
constexpr Rgba8 kLight{235, 235, 235, 255};

PixelCoord equirect_coord(double theta, double phi, int width, int height) {
    return {(theta + kPi) * width / kTwoPi, (kPi / 2 - phi) * height / kPi};
}

double wrapped_delta(double a, double b, int width) {
    double d = std::fmod(a - b, static_cast<double>(width));
    if (d >= width / 2.0) d -= width;
    if (d < -width / 2.0) d += width;
    return d;
}

}  // namespace

std::vector<Point3> ChessboardScene::interior_corners() const {
    std::vector<Point3> out;
    out.reserve(static_cast<size_t>((rows - 1) * (cols - 1)));
    for (int r = 1; r < rows; ++r) {
        for (int c = 1; c < cols; ++c) out.push_back(corner(r, c));
    }
    return out;
}

std::optional<Rgba8> ChessboardScene::colour_at(const Point3& p) const {
    const Point3 rel = p - origin;
    const double a = rel.dot(u) / square_size;
    const double b = rel.dot(v) / square_size;
    if (a < 0.0 || b < 0.0 || a >= rows || b >= cols) return std::nullopt;
    const int parity = (static_cast<int>(a) + static_cast<int>(b)) % 2;
    return parity ? kLight : kDark;
}

ChessboardScene make_chessboard(const ChessboardParams& p) {
    if (p.rows < 2 || p.cols < 2) throw Error(ErrorCode::BadParams, "chessboard needs at least 2x2 squares");
    if (!(p.distance > 0.0)) throw Error(ErrorCode::BadParams, "chessboard distance must be positive");
    if (p.square_size < 0.0) throw Error(ErrorCode::BadParams, "square size must be non-negative");
    if (p.square_size == 0.0 && !(p.hfov > 0.0 && p.hfov < kPi)) {
        throw Error(ErrorCode::BadParams, "board field of view must lie in (0, pi)");
    }
    if (std::abs(p.phi) > kPi / 2) throw Error(ErrorCode::BadParams, "board elevation out of range");

    ChessboardScene s;
    s.rows = p.rows;
    s.cols = p.cols;
    s.distance = p.distance;
    s.theta = p.theta;
    s.phi = p.phi;
    s.square_size = p.square_size > 0.0 ? p.square_size : 2.0 * p.distance * std::tan(p.hfov / 2.0) / p.cols;

    const Rotation3 frame = rotation_about_y(p.theta) * rotation_about_x(p.phi);
    s.center = frame * Point3{0, 0, p.distance};
    s.v = frame * Point3{1, 0, 0};
    s.u = frame * Point3{0, -1, 0};
    s.normal = frame * Point3{0, 0, -1};
    s.origin = s.center - s.u * (p.rows * s.square_size / 2.0) - s.v * (p.cols * s.square_size / 2.0);
    return s;
}

std::optional<CornerPair> ods_project(const Point3& p, double baseline, int width, int height) {
    const double b = baseline / 2.0;
    const double r = std::hypot(p.x, p.z);
    if (r <= b) return std::nullopt;
    const double theta = std::atan2(p.x, p.z);
    const double delta = std::asin(b / r);
    const double phi = std::atan2(p.y, std::sqrt(r * r - b * b));
    return CornerPair{equirect_coord(wrap_angle(theta + delta), phi, width, height),
                      equirect_coord(wrap_angle(theta - delta), phi, width, height)};
}

GtRender render_gt_ods(const ChessboardScene& scene, const StereoRig& rig, int width, int height) {
    if (width != 2 * height || width <= 0) throw Error(ErrorCode::BadAspect, "ground-truth panorama must be 2:1");
    GtRender gt;
    gt.image.left = EquirectImage(width, height, kEvalBackground);
    gt.image.right = EquirectImage(width, height, kEvalBackground);
    const double b = rig.baseline / 2.0;
    const double plane_d = scene.center.dot(scene.normal);

    for (int eye = 0; eye < 2; ++eye) {
        EquirectImage& out = eye == 0 ? gt.image.left : gt.image.right;
        const double side = eye == 0 ? -b : b;
        for (int c = 0; c < width; ++c) {
            for (int r = 0; r < height; ++r) {
                float acc[3] = {0, 0, 0};
                for (int k = 0; k < 4; ++k) {
                    const double theta = -kPi + (c + 0.25 + 0.5 * (k & 1)) * kTwoPi / width;
                    const double phi = kPi / 2 - (r + 0.25 + 0.5 * (k >> 1)) * kPi / height;
                    const Point3 e = rotation_about_y(theta) * Point3{side, 0, 0};
                    const Point3 d = direction_of(theta, phi);
                    const double denom = d.dot(scene.normal);
                    Rgba8 col = kEvalBackground;
                    if (denom < 0.0) {
                        const double t = (plane_d - e.dot(scene.normal)) / denom;
                        if (t > 0.0) {
                            if (auto hit = scene.colour_at(e + d * t)) col = *hit;
                        }
                    }
                    acc[0] += col.r;
                    acc[1] += col.g;
                    acc[2] += col.b;
                }
                out(c, r) = to_rgba8({acc[0] / 4, acc[1] / 4, acc[2] / 4, 255.f});
            }
        }
    }

    gt.corners = scene.interior_corners();
    for (const Point3& p : gt.corners) {
        const auto px = ods_project(p, rig.baseline, width, height);
        if (!px) throw Error(ErrorCode::BadParams, "board corner lies inside the viewing circle");
        gt.pixels.push_back(*px);
    }
    return gt;
}

double disparity_difference(const std::vector<CornerPair>& method, const std::vector<CornerPair>& gt, int width) {
    if (method.size() != gt.size()) {
        throw Error(ErrorCode::CountMismatch, std::to_string(method.size()) + " method corners vs " +
                                                  std::to_string(gt.size()) + " ground-truth corners");
    }
    if (gt.empty()) throw Error(ErrorCode::EmptyInput, "no corners to compare");
    double sum = 0.0;
    for (size_t i = 0; i < gt.size(); ++i) {
        const double mc = wrapped_delta(method[i].left.col, method[i].right.col, width);
        const double mr = method[i].left.row - method[i].right.row;
        const double gc = wrapped_delta(gt[i].left.col, gt[i].right.col, width);
        const double gr = gt[i].left.row - gt[i].right.row;
        sum += std::hypot(mc - gc, mr - gr);
    }
    return sum / static_cast<double>(gt.size());
}

SyntheticCapture capture_board(const ChessboardScene& scene, const StereoRig& rig, int image_width) {
    if (image_width < scene.cols) throw Error(ErrorCode::BadParams, "capture narrower than the board's columns");
    const int m = (image_width + scene.cols - 1) / scene.cols;  // pixels per square
    SyntheticCapture cap;
    cap.intr.width = m * scene.cols;
    cap.intr.height = m * scene.rows;
    cap.intr.f = m * scene.distance / scene.square_size;
    const float disparity = static_cast<float>(cap.intr.f * rig.baseline / scene.distance);
    cap.image = PlanarImage(cap.intr.width, cap.intr.height);
    cap.disparity = DisparityMap(cap.intr.width, cap.intr.height, disparity);
    cap.alpha = Mask(cap.intr.width, cap.intr.height, 1.f);
    for (int y = 0; y < cap.intr.height; ++y) {
        for (int x = 0; x < cap.intr.width; ++x) cap.image(x, y) = ((x / m + y / m) % 2) ? kLight : kDark;
    }
    return cap;
}

std::vector<EvalPosition> default_eval_positions() {
    std::vector<EvalPosition> out;
    for (const double deg : {-70.0, -35.0, 0.0, 35.0, 70.0}) out.push_back({0.0, deg_to_rad(deg)});
    return out;
}

EvalReport run_eval(const EvalConfig& config) {
    const auto t_start = std::chrono::steady_clock::now();
    if (config.width <= 0 || config.width % 2) throw Error(ErrorCode::BadParams, "panorama width must be even");
    const int width = config.width;
    const int height = width / 2;
    const std::vector<EvalPosition> positions =
        config.positions.empty() ? default_eval_positions() : config.positions;

    struct Job {
        Strategy strategy;
        EvalPosition pos;
    };
    std::vector<Job> jobs;
    for (const EvalPosition& p : positions) {
        for (const Strategy s : config.strategies) jobs.push_back({s, p});
    }

    StereoEquirect target{EquirectImage(width, height, kEvalBackground), EquirectImage(width, height, kEvalBackground)};
    EvalReport report;
    report.rows.resize(jobs.size());

    parallel_for(
        jobs.size(),
        [&](size_t j) {
            const auto t0 = std::chrono::steady_clock::now();
            const Job& job = jobs[j];
            ChessboardParams params = config.board;
            params.theta = job.pos.theta;
            params.phi = job.pos.phi;
            const ChessboardScene scene = make_chessboard(params);

            const double board_px = width * (scene.cols * scene.square_size / scene.distance) / kTwoPi;
            const int source_width =
                config.source_width > 0 ? config.source_width : static_cast<int>(std::ceil(2.0 * board_px));
            const SyntheticCapture cap = capture_board(scene, config.rig, source_width);
            const SourceObject source = make_source_object(cap.image, cap.disparity, cap.alpha, cap.intr, config.rig);

            PlacementSpec spec;
            spec.theta = job.pos.theta;
            spec.phi = job.pos.phi;
            spec.distance = scene.distance;
            spec.strategy = job.strategy;
            spec.key_columns = config.key_columns;

            ComposeOptions options;
            options.rig = config.rig;
            options.threads = 1;
            const ComposeResult res = compose(target, source, spec, options);

            // Board corners as the pipeline places them.
            const ObjectPlacement placement(reference_point(source.cloud), spec);
            std::vector<CornerPair> method;
            std::vector<CornerPair> gt;
            for (int r = 1; r < scene.rows; ++r) {
                for (int c = 1; c < scene.cols; ++c) {
                    const int m = cap.intr.width / scene.cols;
                    const Point3 p = placement.to_world(
                        backproject({static_cast<double>(c * m), static_cast<double>(r * m)}, scene.distance, cap.intr));
                    const auto truth = ods_project(p, config.rig.baseline, width, height);
                    const auto l = res.plan.project(p, Eye::Left);
                    const auto rr = res.plan.project(p, Eye::Right);
                    if (!truth || !l || !rr) continue;
                    gt.push_back(*truth);
                    method.push_back({*l, *rr});
                }
            }
            EvalRow& row = report.rows[j];
            row.strategy = job.strategy;
            row.theta = job.pos.theta;
            row.phi = job.pos.phi;
            row.corners = gt.size();
            row.mean_disparity_error_px = disparity_difference(method, gt, width);
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        },
        config.threads);

    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

std::string EvalReport::csv() const {
    std::ostringstream os;
    os << "strategy,theta_deg,phi_deg,mean_disparity_error_px\n";
    os << std::setprecision(10);
    for (const EvalRow& r : rows) {
        os << to_string(r.strategy) << ',' << rad_to_deg(r.theta) << ',' << rad_to_deg(r.phi) << ','
           << r.mean_disparity_error_px << '\n';
    }
    return os.str();
}

std::string EvalReport::markdown() const {
    std::vector<std::pair<double, double>> cols;
    std::vector<Strategy> strategies;
    std::map<std::pair<int, std::pair<double, double>>, double> cell;
    for (const EvalRow& r : rows) {
        const auto key = std::make_pair(r.theta, r.phi);
        if (std::find(cols.begin(), cols.end(), key) == cols.end()) cols.push_back(key);
        if (std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end()) {
            strategies.push_back(r.strategy);
        }
        cell[{static_cast<int>(r.strategy), key}] = r.mean_disparity_error_px;
    }
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << "| strategy |";
    for (const auto& [t, p] : cols) os << " (" << std::setprecision(0) << rad_to_deg(t) << ", " << rad_to_deg(p) << ") |";
    os << "\n|---|";
    for (size_t i = 0; i < cols.size(); ++i) os << "---|";
    os << '\n' << std::setprecision(4);
    for (const Strategy s : strategies) {
        os << "| " << to_string(s) << " |";
        for (const auto& key : cols) {
            const auto it = cell.find({static_cast<int>(s), key});
            if (it == cell.end()) {
                os << " - |";
            } else {
                os << ' ' << it->second << " |";
            }
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace ods
