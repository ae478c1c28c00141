#include "ods/compose.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "ods/error.hpp"
#include "ods/parallel.hpp"

namespace ods {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int wrap_col(int c, int w) {
    c %= w;
    return c < 0 ? c + w : c;
}

// Continuous column coordinate of an azimuth (pixel centres at +0.5).
double column_coord(double theta, int w) { return (theta + kPi) * w / kTwoPi; }

double column_edge_theta(int c, int w) { return viewing_direction(wrap_col(c, w), w); }

void require_equirect_pair(const StereoEquirect& target) {
    if (target.left.width() != target.right.width() || target.left.height() != target.right.height()) {
        throw Error(ErrorCode::DimensionMismatch, "left and right panoramas differ in size");
    }
    if (target.width() != 2 * target.height() || target.width() == 0) {
        throw Error(ErrorCode::BadAspect, "target panorama must be 2:1");
    }
}

void require_scene_depth(const SceneDepth* scene_depth, const StereoEquirect& target) {
    if (scene_depth && !scene_depth->same_shape(target.width(), target.height())) {
        throw Error(ErrorCode::DimensionMismatch, "scene depth differs in size from the target");
    }
}

std::optional<double> scene_at(const SceneDepth* scene_depth, size_t i) {
    if (!scene_depth) return std::nullopt;
    const float z = (*scene_depth)[i];
    if (!(z > 0.f) || !std::isfinite(z)) return std::nullopt;
    return z;
}

// Depth at a continuous raster position, averaging the valid bilinear neighbours.
std::optional<double> sample_depth(const DepthMap& depth, double u, double v) {
    const double x = u - 0.5;
    const double y = v - 0.5;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    double acc = 0.0;
    double wsum = 0.0;
    for (int k = 0; k < 4; ++k) {
        const int xi = x0 + (k & 1);
        const int yi = y0 + (k >> 1);
        const double w = ((k & 1) ? fx : 1.0 - fx) * ((k >> 1) ? fy : 1.0 - fy);
        if (w <= 0.0 || xi < 0 || yi < 0 || xi >= depth.width() || yi >= depth.height() || !depth.valid(xi, yi)) {
            continue;
        }
        acc += w * depth.depth(xi, yi);
        wsum += w;
    }
    if (wsum <= 0.0) return std::nullopt;
    return acc / wsum;
}

// Walks the target pixels of `cols` that land on the synthesized view and hands
// each object sample to `sink(col, row, colour, distance)`.
template <typename Sink>
void render_columns(const SynthesizedView& view, Eye eye, const std::vector<int>& cols, int width, int height,
                    Sink&& sink) {
    const CameraPose& pose = eye == Eye::Left ? view.pair.left : view.pair.right;
    const PlanarImage& image = eye == Eye::Left ? view.left : view.right;
    const DepthMap& depth = eye == Eye::Left ? view.dense_left.depth : view.dense_right.depth;
    if (image.empty()) return;
    const Rotation3 to_camera = pose.rotation.transposed();
    for (const int c : cols) {
        const double theta = equirect_column_theta(c, width);
        for (int r = 0; r < height; ++r) {
            const Point3 d = to_camera * direction_of(theta, equirect_row_phi(r, height));
            if (d.z <= 1e-9) continue;
            const PixelCoord px = view.intr.project(d);
            if (px.col < 0.0 || px.row < 0.0 || px.col > image.width() || px.row > image.height()) continue;
            const RgbaF s = sample_rgba(image, px.col, px.row);
            if (s.a <= 0.f) continue;
            const Rgba8 colour = to_rgba8(s);
            if (colour.a == 0) continue;
            const auto z = sample_depth(depth, px.col, px.row);
            if (!z) continue;
            sink(c, r, colour, static_cast<float>(*z / d.z));
        }
    }
}

// Circular column window plus a row band, used to crop equirect work areas.
struct Window {
    int col0 = 0;
    int cols = 0;
    int row0 = 0;
    int rows = 0;
    int pano_width = 0;

    bool empty() const { return cols == 0 || rows == 0; }
    int pano_col(int x) const { return wrap_col(col0 + x, pano_width); }
    // Local column of a panorama column, or -1 outside.
    int local_col(int pc) const {
        const int x = wrap_col(pc - col0, pano_width);
        return x < cols ? x : -1;
    }
};

Window find_window(const std::vector<uint8_t>& used_cols, int row_lo, int row_hi, int pad, int width, int height) {
    Window win;
    win.pano_width = width;
    // Longest circular run of unused columns.
    int best_start = -1;
    int best_len = 0;
    int start = -1;
    int len = 0;
    for (int i = 0; i < 2 * width; ++i) {
        if (!used_cols[static_cast<size_t>(i % width)]) {
            if (len == 0) start = i;
            ++len;
            if (len > best_len && len <= width) {
                best_len = len;
                best_start = start;
            }
        } else {
            len = 0;
        }
    }
    if (best_len == width) return win;  // nothing used
    if (best_len <= 2 * pad) {
        win.col0 = 0;
        win.cols = width;
    } else {
        win.col0 = wrap_col(best_start + best_len - pad, width);
        win.cols = width - best_len + 2 * pad;
    }
    win.row0 = std::max(0, row_lo - pad);
    win.rows = std::min(height - 1, row_hi + pad) - win.row0 + 1;
    return win;
}

struct Group {
    int index = 0;
    double lo = 0.0;
    double hi = 0.0;
    double camera_theta = 0.0;
};

std::vector<Group> plan_groups(Strategy strategy, int width, int segments, int k, double reference_theta) {
    std::vector<Group> groups;
    if (strategy == Strategy::PerColumn) {
        const int n = segments > 0 ? segments : width;
        groups.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double lo = viewing_direction(i, n);
            groups.push_back({i, lo, lo + kTwoPi / n, lo + kPi / n});
        }
        return groups;
    }
    // Key columns: groups of k columns, one of them centred on the object.
    const int ref_col = wrap_col(static_cast<int>(std::floor(column_coord(reference_theta, width))), width);
    const int first = ref_col - (k - 1) / 2;
    const int count = (width + k - 1) / k;
    for (int g = 0; g < count; ++g) {
        const int n = std::min(k, width - g * k);
        const double lo = column_edge_theta(first + g * k, width);
        groups.push_back({g, lo, lo + n * (kTwoPi / width), lo + n * (kPi / width)});
    }
    return groups;
}

DenseResult densify_or_empty(const Densifier& densifier, const DepthMap& sparse) {
    if (sparse.valid_count() == 0) return {DepthMap(sparse.width(), sparse.height()), Mask(sparse.width(), sparse.height(), 0.f)};
    return densifier.run(sparse);
}

struct SharedTimings {
    std::mutex mutex;
    StageTimings t;

    void add(double StageTimings::*field, double s) {
        std::lock_guard lock(mutex);
        t.*field += s;
    }
};

Rgba8 colour_from_source(const SourceObject& source, const ObjectPlacement& placement, const Point3& world,
                         float mask, bool& outside) {
    const Point3 src = placement.to_source(world);
    outside = true;
    if (!(src.z > 0.0)) return {};
    const PixelCoord uv = project_to_source(src, source.intr);
    if (!(uv.col >= 0.0 && uv.row >= 0.0 && uv.col < source.image.width() && uv.row < source.image.height())) {
        return {};
    }
    outside = false;
    RgbaF s = sample_rgba(source.image, uv.col, uv.row);
    s.a *= mask;
    return to_rgba8(s);
}

void check_source_hits(const SourceHits& hits) {
    if (2 * hits.outside > hits.total) {
        throw Error(ErrorCode::OutOfSource, std::to_string(hits.outside) + " of " + std::to_string(hits.total) +
                                                " object pixels fall outside the source frame");
    }
}

// Guidance must carry only the object's own gradients, so the colour of pixels
// off the object is replaced by that of the nearest object pixel (breadth-first
// over 4-neighbours). Edges leaving the object then guide nothing.
void extend_object_colour(ImageF& region, const Raster<uint8_t>& known) {
    const int cols = region.width();
    const int rows = region.height();
    std::vector<uint8_t> seen(region.size(), 0);
    std::vector<std::pair<int, int>> queue;
    queue.reserve(region.size());
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            if (known(x, y)) {
                seen[region.index(x, y)] = 1;
                queue.emplace_back(x, y);
            }
        }
    }
    for (size_t head = 0; head < queue.size(); ++head) {
        const auto [x, y] = queue[head];
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= cols || ny >= rows || seen[region.index(nx, ny)]) continue;
            seen[region.index(nx, ny)] = 1;
            region(nx, ny) = region(x, y);
            queue.emplace_back(nx, ny);
        }
    }
}

void poisson_finish(ComposeResult& res, const StereoEquirect& target, const SceneDepth* scene_depth,
                    const PoissonOptions& options) {
    const int w = target.width();
    const int h = target.height();
    Raster<uint8_t> visible(w, h, 0);
    std::vector<uint8_t> used(static_cast<size_t>(w), 0);
    int row_lo = h;
    int row_hi = -1;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = visible.index(x, y);
            if (res.left_layer.color[i].a == 0 || !occlusion_test(res.left_layer.distance[i], scene_at(scene_depth, i))) {
                continue;
            }
            visible[i] = 1;
            used[static_cast<size_t>(x)] = 1;
            row_lo = std::min(row_lo, y);
            row_hi = std::max(row_hi, y);
        }
    }
    if (row_hi < 0) return;
    const Window win = find_window(used, row_lo, row_hi, 1, w, h);

    ImageF region_target(win.cols, win.rows);
    ImageF region_source(win.cols, win.rows);
    Raster<uint8_t> region_mask(win.cols, win.rows, 0);
    Raster<uint8_t> known(win.cols, win.rows, 0);
    for (int y = 0; y < win.rows; ++y) {
        for (int x = 0; x < win.cols; ++x) {
            const int pc = win.pano_col(x);
            const int pr = win.row0 + y;
            // Behind a scene occluder the boundary value is the object itself, so the
            // occluder's colour does not bleed into the blend.
            const size_t pi = visible.index(pc, pr);
            const Rgba8 layer = res.left_layer.color[pi];
            const Rgba8 t = layer.a > 0 && !visible[pi] ? over(layer, target.left[pi]) : target.left[pi];
            const Rgba8 s = layer.a > 0 && !visible[pi] ? t : res.image.left[pi];
            known(x, y) = layer.a > 0 ? 1 : 0;
            region_target(x, y) = {float(t.r), float(t.g), float(t.b), float(t.a)};
            region_source(x, y) = {float(s.r), float(s.g), float(s.b), float(s.a)};
            const bool border = x == 0 || y == 0 || x == win.cols - 1 || y == win.rows - 1;
            region_mask(x, y) = visible(pc, pr) && !border ? 1 : 0;
        }
    }
    if (std::none_of(region_mask.data().begin(), region_mask.data().end(), [](uint8_t m) { return m != 0; })) return;
    extend_object_colour(region_source, known);
    const ImageF solved = poisson_solve(region_target, region_source, region_mask, options);

    Raster<uint8_t> blended(w, h, 0);
    for (int y = 0; y < win.rows; ++y) {
        for (int x = 0; x < win.cols; ++x) {
            if (!region_mask(x, y)) continue;
            const int pc = win.pano_col(x);
            const int pr = win.row0 + y;
            res.image.left(pc, pr) = to_rgba8(solved(x, y));
            blended(pc, pr) = 1;
        }
    }

    // Right eye: copy the blended colour of the geometrically matching left pixel.
    // Pixels whose match is occluded or missing in the left view keep their colour.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = blended.index(x, y);
            const Rgba8 obj = res.right_layer.color[i];
            const float dist = res.right_layer.distance[i];
            if (obj.a == 0 || !occlusion_test(dist, scene_at(scene_depth, i))) continue;
            const double alpha = res.plan.camera_theta[static_cast<size_t>(x)];
            if (std::isnan(alpha)) continue;
            const Point3 p = res.plan.eye_center(alpha, Eye::Right) +
                             direction_of(equirect_column_theta(x, w), equirect_row_phi(y, h)) * dist;
            const auto pl = res.plan.project(p, Eye::Left);
            if (!pl) continue;
            const int lx = wrap_col(static_cast<int>(std::floor(pl->col)), w);
            const int ly = std::clamp(static_cast<int>(std::floor(pl->row)), 0, h - 1);
            if (!blended(lx, ly)) continue;
            const double left_alpha = res.plan.camera_theta[static_cast<size_t>(lx)];
            const double expected = (p - res.plan.eye_center(left_alpha, Eye::Left)).norm();
            if (std::abs(res.left_layer.distance(lx, ly) - expected) > 0.02 * expected + 1e-6) continue;
            const Rgba8 l = res.image.left(lx, ly);
            res.image.right(x, y) = {l.r, l.g, l.b, res.image.right(x, y).a};
        }
    }
}

void finish(ComposeResult& res, const StereoEquirect& target, const SceneDepth* scene_depth, BlendMode blend,
            const PoissonOptions& poisson) {
    res.image = target;
    composite_layer(res.image.left, res.left_layer, scene_depth);
    composite_layer(res.image.right, res.right_layer, scene_depth);
    if (blend == BlendMode::Poisson) poisson_finish(res, target, scene_depth, poisson);
}

}  // namespace

SourceObject make_source_object(const PlanarImage& left, const DisparityMap& disp, const Mask& alpha,
                                const CameraIntrinsics& intr, const StereoRig& rig) {
    SourceObject obj;
    obj.cloud = reconstruct_cloud(left, disp, alpha, intr, rig);
    obj.image = left;
    for (size_t i = 0; i < obj.image.size(); ++i) {
        obj.image[i].a = static_cast<uint8_t>(std::lround(std::clamp(alpha[i], 0.f, 1.f) * 255.f));
    }
    obj.intr = intr;
    return obj;
}

SynthesizedView synthesize_view_pair(const DenseResult& dense_left, const DenseResult& dense_right,
                                     const SourceObject& source, const ObjectPlacement& placement,
                                     const CameraPair& pair, const ViewIntrinsics& intr,
                                     std::optional<ColumnRange> columns, SourceHits* hits) {
    for (const DenseResult* d : {&dense_left, &dense_right}) {
        if (!d->depth.depths().same_shape(intr.width, intr.height) || !d->mask.same_shape(intr.width, intr.height)) {
            throw Error(ErrorCode::DimensionMismatch, "dense depth does not match the view raster");
        }
    }
    SynthesizedView view{PlanarImage(intr.width, intr.height), PlanarImage(intr.width, intr.height),
                         dense_left, dense_right, intr, pair};
    const int x_begin = columns ? std::clamp(columns->first, 0, intr.width) : 0;
    const int x_end = columns ? std::clamp(columns->last, 0, intr.width) : intr.width;

    size_t total = 0;
    size_t outside = 0;
    auto synthesize = [&](const DenseResult& dense, const CameraPose& pose, PlanarImage& out) {
        for (int y = 0; y < intr.height; ++y) {
            for (int x = x_begin; x < x_end; ++x) {
                const float m = dense.mask(x, y);
                if (m <= 0.f || !dense.depth.valid(x, y)) continue;
                ++total;
                const Point3 cam = intr.ray(x + 0.5, y + 0.5) * static_cast<double>(dense.depth.depth(x, y));
                bool out_of_frame = false;
                out(x, y) = colour_from_source(source, placement, pose.to_world(cam), m, out_of_frame);
                if (out_of_frame) ++outside;
            }
        }
    };
    synthesize(dense_left, pair.left, view.left);
    synthesize(dense_right, pair.right, view.right);
    if (hits) {
        hits->total += total;
        hits->outside += outside;
    } else {
        check_source_hits({total, outside});
    }
    return view;
}

std::vector<int> columns_in_interval(double theta_lo, double theta_hi, int width) {
    std::vector<int> cols;
    if (width <= 0 || !(theta_hi > theta_lo)) return cols;
    if (theta_hi - theta_lo >= kTwoPi) {
        cols.resize(static_cast<size_t>(width));
        for (int c = 0; c < width; ++c) cols[static_cast<size_t>(c)] = c;
        return cols;
    }
    const int first = static_cast<int>(std::ceil(column_coord(theta_lo, width) - 0.5));
    const int last = static_cast<int>(std::ceil(column_coord(theta_hi, width) - 0.5));
    for (int c = first; c < last; ++c) cols.push_back(wrap_col(c, width));
    return cols;
}

void render_view_columns(EyeLayer& layer, const SynthesizedView& view, Eye eye, double theta_lo, double theta_hi) {
    const int w = layer.color.width();
    const int h = layer.color.height();
    render_columns(view, eye, columns_in_interval(theta_lo, theta_hi, w), w, h,
                   [&](int c, int r, const Rgba8& colour, float dist) {
                       layer.color(c, r) = colour;
                       layer.distance(c, r) = dist;
                   });
}

bool occlusion_test(double object_z, std::optional<double> scene_z) { return !scene_z || object_z <= *scene_z; }

Rgba8 over(const Rgba8& src, const Rgba8& dst) {
    if (src.a == 255) return src;
    if (src.a == 0) return dst;
    const float as = src.a / 255.f;
    const float ad = dst.a / 255.f;
    const float ao = as + ad * (1.f - as);
    if (ao <= 0.f) return {};
    const float kd = ad * (1.f - as);
    return to_rgba8({(src.r * as + dst.r * kd) / ao, (src.g * as + dst.g * kd) / ao, (src.b * as + dst.b * kd) / ao,
                     ao * 255.f});
}

void composite_layer(Raster<Rgba8>& target, const EyeLayer& layer, const SceneDepth* scene_depth) {
    if (!target.same_shape(layer.color)) throw Error(ErrorCode::DimensionMismatch, "layer differs in size from target");
    if (scene_depth && !scene_depth->same_shape(target)) {
        throw Error(ErrorCode::DimensionMismatch, "scene depth differs in size from target");
    }
    for (size_t i = 0; i < target.size(); ++i) {
        const Rgba8& c = layer.color[i];
        if (c.a == 0 || !occlusion_test(layer.distance[i], scene_at(scene_depth, i))) continue;
        target[i] = over(c, target[i]);
    }
}

void compose_columns(StereoEquirect& target, const SynthesizedView& view, const ViewSegment& seg,
                     const SceneDepth* scene_depth) {
    require_equirect_pair(target);
    require_scene_depth(scene_depth, target);
    const int w = target.width();
    const int h = target.height();
    const std::vector<int> cols = columns_in_interval(seg.theta_lo, seg.theta_hi, w);
    for (const Eye eye : {Eye::Left, Eye::Right}) {
        Raster<Rgba8>& out = eye == Eye::Left ? target.left : target.right;
        render_columns(view, eye, cols, w, h, [&](int c, int r, const Rgba8& colour, float dist) {
            const size_t i = out.index(c, r);
            if (occlusion_test(dist, scene_at(scene_depth, i))) out[i] = over(colour, out[i]);
        });
    }
}

void RenderPlan::build_runs() {
    runs.clear();
    const int w = static_cast<int>(camera_theta.size());
    int c = 0;
    while (c < w) {
        const double t = camera_theta[static_cast<size_t>(c)];
        int end = c + 1;
        while (end < w && camera_theta[static_cast<size_t>(end)] == t) ++end;
        if (!std::isnan(t)) runs.push_back({c, end - c, t});
        c = end;
    }
    // Merge a run split by the seam.
    if (runs.size() > 1 && runs.front().first == 0 && runs.back().first + runs.back().count == w &&
        runs.front().theta == runs.back().theta) {
        runs.back().count += runs.front().count;
        runs.erase(runs.begin());
    }
}

Point3 RenderPlan::eye_center(double theta, Eye eye) const {
    const double b = rig.baseline / 2.0;
    return rotation_about_y(theta) * Point3{eye == Eye::Left ? -b : b, 0.0, 0.0};
}

std::optional<PixelCoord> RenderPlan::project(const Point3& p, Eye eye) const {
    if (runs.empty() && !camera_theta.empty()) {
        RenderPlan copy = *this;
        copy.build_runs();
        if (copy.runs.empty()) return std::nullopt;
        return copy.project(p, eye);
    }
    if (runs.empty()) return std::nullopt;

    // Continuous per-column answer, used to find the runs worth checking.
    const double b = rig.baseline / 2.0;
    const double r = std::hypot(p.x, p.z);
    const double side = eye == Eye::Left ? 1.0 : -1.0;
    const double guess = wrap_angle(std::atan2(p.x, p.z) + side * std::asin(std::min(1.0, b / std::max(r, 1e-12))));
    const int guess_col = wrap_col(static_cast<int>(std::floor(column_coord(guess, width))), width);

    auto run_it = std::upper_bound(runs.begin(), runs.end(), guess_col,
                                   [](int c, const Run& run) { return c < run.first; });
    const int n = static_cast<int>(runs.size());
    const int centre = run_it == runs.begin() ? n - 1 : static_cast<int>(run_it - runs.begin()) - 1;
    const int reach = std::min(n, 7);

    std::optional<PixelCoord> best;
    int best_gap = std::numeric_limits<int>::max();
    for (int k = 0; k < reach; ++k) {
        const int offset = (k + 1) / 2 * (k % 2 ? 1 : -1);
        const Run& run = runs[static_cast<size_t>(((centre + offset) % n + n) % n)];
        const Point3 v = p - eye_center(run.theta, eye);
        const double horiz = std::hypot(v.x, v.z);
        if (horiz < 1e-12) continue;
        const double col = column_coord(std::atan2(v.x, v.z), width);
        const int c = wrap_col(static_cast<int>(std::floor(col)), width);
        const int into = wrap_col(c - run.first, width);
        const int gap = into < run.count ? 0 : std::min(into - run.count + 1, width - into);
        if (gap < best_gap) {
            best_gap = gap;
            const double phi = std::atan2(v.y, horiz);
            best = PixelCoord{std::fmod(col, static_cast<double>(width)), (kPi / 2 - phi) * height / kPi};
        }
        if (gap == 0) break;
    }
    return best;
}

ComposeResult compose(const StereoEquirect& target, const SourceObject& source, const PlacementSpec& spec,
                      const ComposeOptions& options, const SceneDepth* scene_depth) {
    spec.validate();
    if (spec.strategy == Strategy::OneOff) return one_off_compose(target, source, spec, options, scene_depth);
    require_equirect_pair(target);
    require_scene_depth(scene_depth, target);
    options.rig.validate();
    if (!(options.raster_oversample > 0.0) || options.neighbor_margin < 0.0) {
        throw Error(ErrorCode::BadParams, "invalid composition options");
    }

    const int w = target.width();
    const int h = target.height();
    ComposeResult res;
    res.plan.strategy = spec.strategy;
    res.plan.width = w;
    res.plan.height = h;
    res.plan.rig = options.rig;
    res.plan.camera_theta.assign(static_cast<size_t>(w), std::numeric_limits<double>::quiet_NaN());
    res.left_layer = EyeLayer(w, h);
    res.right_layer = EyeLayer(w, h);
    if (source.cloud.empty()) {
        res.image = target;
        return res;
    }

    const ObjectPlacement placement(reference_point(source.cloud), spec);
    const PointCloud cloud = placement.place(source.cloud);
    const AzimuthIndex index(cloud);
    const InterpolationDensifier default_densifier;
    const Densifier& densifier = options.densifier ? *options.densifier : default_densifier;

    const int k = spec.strategy == Strategy::KeyColumn ? spec.key_columns : 1;
    const std::vector<Group> groups =
        plan_groups(spec.strategy, w, options.segments, k, to_spherical(placement.world_reference()).theta);

    // Points can show up this far outside their own azimuth interval.
    double min_radius = std::numeric_limits<double>::infinity();
    for (const auto& pt : cloud.points) min_radius = std::min(min_radius, std::hypot(pt.position.x, pt.position.z));
    const double half_b = options.rig.baseline / 2.0;
    const double parallax = min_radius > half_b ? std::asin(half_b / min_radius) : kPi / 2;
    const double pad = std::min(options.neighbor_margin, parallax + kTwoPi / w);

    const double px_h = options.raster_oversample * w / kTwoPi;
    const double px_v = options.raster_oversample * h / kPi;
    const double elev_pad = 3.0 / px_v;
    const double elev_limit = kPi / 2 - 1e-6;

    SharedTimings timings;
    SourceHits hits;
    std::atomic<int> views{0};

    parallel_for(
        groups.size(),
        [&](size_t gi) {
            const Group& g = groups[gi];
            try {
                auto t0 = Clock::now();
                if (index.query(g.lo - pad, g.hi + pad).empty()) return;
                const std::vector<int> cols = columns_in_interval(g.lo, g.hi, w);
                if (cols.empty()) return;

                const CameraPair pair = camera_pair_for_direction(g.camera_theta, options.rig);
                const std::vector<uint32_t> near = index.query(g.lo - options.neighbor_margin,
                                                               g.hi + options.neighbor_margin);
                double e_lo = std::numeric_limits<double>::infinity();
                double e_hi = -e_lo;
                for (const uint32_t pi : near) {
                    for (const CameraPose* pose : {&pair.left, &pair.right}) {
                        const Point3 c = pose->to_camera(cloud.points[pi].position);
                        if (c.z <= 0.0) continue;
                        const double e = std::atan2(c.y, c.z);
                        e_lo = std::min(e_lo, e);
                        e_hi = std::max(e_hi, e);
                    }
                }
                if (!(e_hi >= e_lo)) return;
                e_lo = std::max(-elev_limit, e_lo - elev_pad);
                e_hi = std::min(elev_limit, e_hi + elev_pad);

                const double hfov = std::max(options.min_view_fov, (g.hi - g.lo) + 2.0 * options.neighbor_margin);
                const ViewIntrinsics intr = ViewIntrinsics::covering(hfov, px_h, e_lo, e_hi, px_v);

                ViewSegment seg{g.index, g.lo, g.hi, g.camera_theta, index.query(g.lo, g.hi)};
                const SparseProjection sparse =
                    project_segment(cloud, index, seg, pair, intr, options.neighbor_margin);
                timings.add(&StageTimings::project_s, seconds_since(t0));

                t0 = Clock::now();
                const DenseResult dl = densify_or_empty(densifier, sparse.left);
                const DenseResult dr = densify_or_empty(densifier, sparse.right);
                timings.add(&StageTimings::densify_s, seconds_since(t0));

                t0 = Clock::now();
                const double u_lo = intr.cx() + intr.f * std::tan(g.lo - g.camera_theta);
                const double u_hi = intr.cx() + intr.f * std::tan(g.hi - g.camera_theta);
                const ColumnRange range{static_cast<int>(std::floor(u_lo)) - 2, static_cast<int>(std::ceil(u_hi)) + 2};
                SourceHits local;
                const SynthesizedView view = synthesize_view_pair(dl, dr, source, placement, pair, intr, range, &local);
                {
                    std::lock_guard lock(timings.mutex);
                    hits.total += local.total;
                    hits.outside += local.outside;
                }
                timings.add(&StageTimings::synthesize_s, seconds_since(t0));

                t0 = Clock::now();
                render_view_columns(res.left_layer, view, Eye::Left, g.lo, g.hi);
                render_view_columns(res.right_layer, view, Eye::Right, g.lo, g.hi);
                for (const int c : cols) res.plan.camera_theta[static_cast<size_t>(c)] = g.camera_theta;
                timings.add(&StageTimings::render_s, seconds_since(t0));
                ++views;
            } catch (const Error& e) {
                throw Error(e.code(), "segment " + std::to_string(g.index) + ": " + e.detail());
            }
        },
        options.threads);

    check_source_hits(hits);
    res.timings = timings.t;
    res.timings.views = views.load();
    res.plan.build_runs();

    const auto t0 = Clock::now();
    finish(res, target, scene_depth, spec.blend, options.poisson);
    (spec.blend == BlendMode::Poisson ? res.timings.blend_s : res.timings.composite_s) = seconds_since(t0);
    return res;
}

ComposeResult one_off_compose(const StereoEquirect& target, const SourceObject& source,
                              const PlacementSpec& spec_in, const ComposeOptions& options,
                              const SceneDepth* scene_depth) {
    PlacementSpec spec = spec_in;
    spec.strategy = Strategy::OneOff;
    spec.validate();
    require_equirect_pair(target);
    require_scene_depth(scene_depth, target);
    options.rig.validate();

    const int w = target.width();
    const int h = target.height();
    ComposeResult res;
    res.plan.strategy = Strategy::OneOff;
    res.plan.width = w;
    res.plan.height = h;
    res.plan.rig = options.rig;
    res.plan.camera_theta.assign(static_cast<size_t>(w), 0.0);
    res.plan.build_runs();
    res.left_layer = EyeLayer(w, h);
    res.right_layer = EyeLayer(w, h);
    if (source.cloud.empty()) {
        res.image = target;
        return res;
    }

    const ObjectPlacement placement(reference_point(source.cloud), spec);
    const PointCloud cloud = placement.place(source.cloud);
    const InterpolationDensifier default_densifier;
    const Densifier& densifier = options.densifier ? *options.densifier : default_densifier;

    struct Splat {
        int col;
        int row;
        float rho;
        float alpha;
    };
    size_t total = 0;
    size_t outside = 0;
    for (const Eye eye : {Eye::Left, Eye::Right}) {
        auto t0 = Clock::now();
        const Point3 eye_pos = res.plan.eye_center(0.0, eye);
        std::vector<Splat> splats;
        splats.reserve(cloud.size());
        std::vector<uint8_t> used(static_cast<size_t>(w), 0);
        int row_lo = h;
        int row_hi = -1;
        for (const auto& pt : cloud.points) {
            const Point3 v = pt.position - eye_pos;
            if (v.norm() < 1e-12) continue;
            const SphericalCoord s = to_spherical(v);
            const PixelCoord px = equirect_pixel_of(s, w, h);
            const int c = wrap_col(static_cast<int>(std::floor(px.col)), w);
            const int r = std::clamp(static_cast<int>(std::floor(px.row)), 0, h - 1);
            splats.push_back({c, r, static_cast<float>(s.rho), pt.alpha});
            used[static_cast<size_t>(c)] = 1;
            row_lo = std::min(row_lo, r);
            row_hi = std::max(row_hi, r);
        }
        if (splats.empty()) continue;
        const Window win = find_window(used, row_lo, row_hi, kMaskCloseRadius + 2, w, h);
        DepthMap sparse(win.cols, win.rows);
        for (const Splat& s : splats) {
            const int x = win.local_col(s.col);
            const int y = s.row - win.row0;
            if (x < 0) continue;
            if (sparse.valid(x, y) && sparse.depth(x, y) <= s.rho) continue;
            sparse.set(x, y, s.rho, s.alpha);
        }
        res.timings.project_s += seconds_since(t0);

        t0 = Clock::now();
        const DenseResult dense = densify_or_empty(densifier, sparse);
        res.timings.densify_s += seconds_since(t0);

        t0 = Clock::now();
        EyeLayer& layer = eye == Eye::Left ? res.left_layer : res.right_layer;
        for (int y = 0; y < win.rows; ++y) {
            for (int x = 0; x < win.cols; ++x) {
                const float m = dense.mask(x, y);
                if (m <= 0.f || !dense.depth.valid(x, y)) continue;
                ++total;
                const int pc = win.pano_col(x);
                const int pr = win.row0 + y;
                const double rho = dense.depth.depth(x, y);
                const Point3 world = eye_pos + direction_of(equirect_column_theta(pc, w), equirect_row_phi(pr, h)) * rho;
                bool out_of_frame = false;
                const Rgba8 colour = colour_from_source(source, placement, world, m, out_of_frame);
                if (out_of_frame) ++outside;
                if (colour.a == 0) continue;
                layer.color(pc, pr) = colour;
                layer.distance(pc, pr) = static_cast<float>(rho);
            }
        }
        res.timings.synthesize_s += seconds_since(t0);
        ++res.timings.views;
    }
    check_source_hits({total, outside});

    const auto t0 = Clock::now();
    finish(res, target, scene_depth, spec.blend, options.poisson);
    (spec.blend == BlendMode::Poisson ? res.timings.blend_s : res.timings.composite_s) = seconds_since(t0);
    return res;
}

Raster<Rgba8> anaglyph(const StereoEquirect& pair) {
    if (!pair.left.same_shape(pair.right)) throw Error(ErrorCode::DimensionMismatch, "stereo halves differ in size");
    Raster<Rgba8> out(pair.left.width(), pair.left.height());
    for (size_t i = 0; i < out.size(); ++i) {
        const Rgba8& l = pair.left[i];
        const Rgba8& r = pair.right[i];
        out[i] = {l.r, r.g, r.b, std::max(l.a, r.a)};
    }
    return out;
}

Raster<Rgba8> side_by_side(const StereoEquirect& pair) {
    if (!pair.left.same_shape(pair.right)) throw Error(ErrorCode::DimensionMismatch, "stereo halves differ in size");
    const int w = pair.left.width();
    Raster<Rgba8> out(2 * w, pair.left.height());
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            out(x, y) = pair.left(x, y);
            out(x + w, y) = pair.right(x, y);
        }
    }
    return out;
}

}  // namespace ods
