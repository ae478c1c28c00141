#include <gtest/gtest.h>

#include "ods/compose.hpp"
#include "ods/error.hpp"
#include "support.hpp"

namespace ods {
namespace {

constexpr double kBaseline = 0.12;

// Smooth colour field over source pixel coordinates.
RgbaF texture(double u, double v) {
    return {float(128 + 60 * std::sin(u / 9.0) * std::cos(v / 11.0)), float(100 + 50 * std::cos(u / 13.0 + v / 17.0)),
            float(140 + 40 * std::sin((u + v) / 15.0)), 255.f};
}

struct Capture {
    PlanarImage image;
    DisparityMap disparity;
    Mask alpha;
    CameraIntrinsics intr;
    double depth = 0;
};

// Frontal plane at depth z filling a w x h capture.
Capture plane_capture(int w, int h, double f, double z) {
    Capture c{PlanarImage(w, h), DisparityMap(w, h, static_cast<float>(f * kBaseline / z)), Mask(w, h, 1.f), {f, w, h}, 0};
    c.depth = f * kBaseline / c.disparity(0, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) c.image(x, y) = to_rgba8(texture(x + 0.5, y + 0.5));
    }
    return c;
}

SourceObject source_of(const Capture& c) {
    return make_source_object(c.image, c.disparity, c.alpha, c.intr, {kBaseline});
}

StereoEquirect grey_target(int w) {
    return {EquirectImage(w, w / 2, {90, 90, 90, 255}), EquirectImage(w, w / 2, {90, 90, 90, 255})};
}

double rms_rgb(const std::vector<std::pair<Rgba8, RgbaF>>& pairs) {
    double s = 0;
    for (const auto& [a, b] : pairs) {
        s += (a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) + (a.b - b.b) * (a.b - b.b);
    }
    return std::sqrt(s / (3.0 * static_cast<double>(pairs.size())));
}

// Synthesizes a view pair for `pair` covering the whole placed cloud.
SynthesizedView synthesize_whole(const SourceObject& src, const ObjectPlacement& placement, const CameraPair& pair,
                                 double px_per_rad, double hfov) {
    const PointCloud placed = placement.place(src.cloud);
    double elo = 1e9, ehi = -1e9;
    for (const auto& p : placed.points) {
        const Point3 q = pair.left.to_camera(p.position);
        const double e = std::atan2(q.y, q.z);
        elo = std::min(elo, e);
        ehi = std::max(ehi, e);
    }
    const ViewIntrinsics intr = ViewIntrinsics::covering(hfov, px_per_rad, elo - 0.05, ehi + 0.05, px_per_rad);
    std::vector<uint32_t> all(placed.size());
    for (uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    const DenseResult dl = densify(splat_points(placed, all, pair.left, intr));
    const DenseResult dr = densify(splat_points(placed, all, pair.right, intr));
    return synthesize_view_pair(dl, dr, src, placement, pair, intr);
}

TEST(SynthesizeViewPair, RoundTripReproducesSource) {
    const Capture cap = plane_capture(160, 120, 200.0, 2.0);
    const SourceObject src = source_of(cap);
    PlacementSpec spec;
    spec.transform.translation = {-kBaseline / 2, 0, 0};  // puts the source camera on the left eye
    const ObjectPlacement placement(reference_point(src.cloud), spec);
    const CameraPair pair = camera_pair_for_direction(0.0, {kBaseline});
    const SynthesizedView view = synthesize_whole(src, placement, pair, 400.0, deg_to_rad(80));

    std::vector<std::pair<Rgba8, RgbaF>> samples;
    for (int y = 8; y < 112; ++y) {
        for (int x = 8; x < 152; ++x) {
            const Point3 world = placement.to_world(backproject({x + 0.5, y + 0.5}, cap.depth, cap.intr));
            const PixelCoord px = view.intr.project(pair.left.to_camera(world));
            const RgbaF s = sample_rgba(view.left, px.col, px.row);
            ASSERT_GT(s.a, 254.f);
            samples.push_back({cap.image(x, y), s});
        }
    }
    EXPECT_LE(rms_rgb(samples), 1.0);
}

TEST(SynthesizeViewPair, ZeroMaskGivesTransparentViews) {
    const SourceObject src = source_of(plane_capture(40, 30, 60.0, 2.0));
    const ViewIntrinsics intr = ViewIntrinsics::square(64, 1.0);
    const DenseResult empty{DepthMap(64, 64), Mask(64, 64, 0.f)};
    const SynthesizedView v = synthesize_view_pair(empty, empty, src, ObjectPlacement(reference_point(src.cloud), {}),
                                                   camera_pair_for_direction(0, {kBaseline}), intr);
    for (size_t i = 0; i < v.left.size(); ++i) {
        ASSERT_EQ(v.left[i].a, 0);
        ASSERT_EQ(v.right[i].a, 0);
    }
}

TEST(SynthesizeViewPair, ConstantColourSurvivesAnyPose) {
    Capture cap = plane_capture(60, 40, 80.0, 1.5);
    cap.image.fill({200, 30, 70, 255});
    const SourceObject src = source_of(cap);
    test::Gen g(81);
    for (int trial = 0; trial < 6; ++trial) {
        PlacementSpec spec;
        spec.theta = g.uniform(-kPi, kPi);
        spec.phi = g.uniform(-0.8, 0.8);
        spec.distance = g.uniform(1, 4);
        spec.transform.scale = g.uniform(0.5, 2);
        spec.transform.yaw = g.uniform(-0.6, 0.6);
        const ObjectPlacement placement(reference_point(src.cloud), spec);
        const CameraPair pair = camera_pair_for_direction(*spec.theta, {kBaseline});
        const SynthesizedView v = synthesize_whole(src, placement, pair, 150.0, deg_to_rad(150));
        size_t seen = 0;
        for (const PlanarImage* img : {&v.left, &v.right}) {
            for (size_t i = 0; i < img->size(); ++i) {
                const Rgba8 c = (*img)[i];
                if (c.a == 0) continue;
                ++seen;
                ASSERT_EQ(c.r, 200);
                ASSERT_EQ(c.g, 30);
                ASSERT_EQ(c.b, 70);
            }
        }
        EXPECT_GT(seen, 0u);
    }
}

TEST(SynthesizeViewPair, OutOfSourceWhenPlacementIsWrong) {
    const SourceObject src = source_of(plane_capture(40, 30, 60.0, 2.0));
    const ObjectPlacement identity(reference_point(src.cloud), {});
    const CameraPair pair = camera_pair_for_direction(0, {kBaseline});
    SynthesizedView v = synthesize_whole(src, identity, pair, 100.0, deg_to_rad(90));
    // Sample the colour through a placement that moved the object somewhere else.
    PlacementSpec moved;
    moved.transform.translation = {3, 0, 0};
    try {
        synthesize_view_pair(v.dense_left, v.dense_right, src, ObjectPlacement(reference_point(src.cloud), moved), pair,
                             v.intr);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutOfSource);
    }
    SourceHits hits;
    EXPECT_NO_THROW(synthesize_view_pair(v.dense_left, v.dense_right, src,
                                         ObjectPlacement(reference_point(src.cloud), moved), pair, v.intr, std::nullopt,
                                         &hits));
    EXPECT_GT(2 * hits.outside, hits.total);
}

TEST(ComposeColumns, TransparentViewLeavesTargetUnchanged) {
    const StereoEquirect target = grey_target(256);
    StereoEquirect out = target;
    SynthesizedView v;
    v.intr = ViewIntrinsics::square(64, 1.0);
    v.left = PlanarImage(64, 64);
    v.right = PlanarImage(64, 64);
    v.dense_left = {DepthMap(64, 64), Mask(64, 64)};
    v.dense_right = v.dense_left;
    v.pair = camera_pair_for_direction(0, {kBaseline});
    ViewSegment seg;
    seg.theta_lo = -0.3;
    seg.theta_hi = 0.3;
    compose_columns(out, v, seg, nullptr);
    EXPECT_EQ(out, target);
}

TEST(ComposeColumns, TouchesOnlyTheSegmentColumn) {
    const SourceObject src = source_of(plane_capture(80, 60, 100.0, 2.0));
    const ObjectPlacement placement(reference_point(src.cloud), {});
    const int w = 512;
    const int col = w / 2 + 3;
    const double lo = viewing_direction(col, w);
    const CameraPair pair = camera_pair_for_direction(lo + kPi / w, {kBaseline});
    const SynthesizedView v = synthesize_whole(src, placement, pair, 200.0, deg_to_rad(90));

    const StereoEquirect target = grey_target(w);
    StereoEquirect out = target;
    ViewSegment seg;
    seg.theta_lo = lo;
    seg.theta_hi = lo + kTwoPi / w;
    compose_columns(out, v, seg, nullptr);

    // phi extent of the object from the origin
    double plo = 1e9, phi_hi = -1e9;
    for (const auto& p : placement.place(src.cloud).points) {
        const double phi = to_spherical(p.position).phi;
        plo = std::min(plo, phi);
        phi_hi = std::max(phi_hi, phi);
    }
    int changed = 0;
    for (int y = 0; y < w / 2; ++y) {
        for (int x = 0; x < w; ++x) {
            if (out.left(x, y) == target.left(x, y)) continue;
            ++changed;
            ASSERT_EQ(x, col);
            const double phi = equirect_row_phi(y, w / 2);
            ASSERT_GE(phi, plo - 0.02);
            ASSERT_LE(phi, phi_hi + 0.02);
        }
    }
    EXPECT_GT(changed, 10);
}

TEST(ColumnsInInterval, CentresInHalfOpenInterval) {
    EXPECT_EQ(columns_in_interval(viewing_direction(5, 64), viewing_direction(8, 64), 64), (std::vector<int>{5, 6, 7}));
    EXPECT_EQ(columns_in_interval(kPi - 0.1, kPi + 0.1, 64), (std::vector<int>{63, 0}));
    EXPECT_EQ(columns_in_interval(-10, 10, 8).size(), 8u);
    EXPECT_TRUE(columns_in_interval(0.0, 0.001, 64).empty());
}

TEST(Occlusion, Examples) {
    EXPECT_TRUE(occlusion_test(2, 5.0));
    EXPECT_FALSE(occlusion_test(5, 2.0));
    EXPECT_TRUE(occlusion_test(3, 3.0));
    EXPECT_TRUE(occlusion_test(100, std::nullopt));
}

TEST(Occlusion, MonotoneInObjectDepth) {
    test::Gen g(82);
    for (int i = 0; i < 10000; ++i) {
        const double scene = g.uniform(0.1, 10);
        const double z = g.uniform(0.1, 10);
        if (occlusion_test(z, scene)) { ASSERT_TRUE(occlusion_test(z * g.uniform(0.01, 1), scene)); }
    }
}

TEST(Over, StraightAlpha) {
    const Rgba8 dst{10, 20, 30, 255};
    EXPECT_EQ(over({1, 2, 3, 255}, dst), (Rgba8{1, 2, 3, 255}));
    EXPECT_EQ(over({1, 2, 3, 0}, dst), dst);
    EXPECT_EQ(over({210, 20, 30, 128}, {10, 20, 30, 255}), (Rgba8{110, 20, 30, 255}));
    const Rgba8 half = over({200, 0, 0, 128}, {0, 0, 0, 0});
    EXPECT_EQ(half, (Rgba8{200, 0, 0, 128}));
}

TEST(CompositeLayer, SceneDepthHidesFartherObject) {
    Raster<Rgba8> target(8, 4, {0, 0, 0, 255});
    EyeLayer layer(8, 4);
    SceneDepth scene(8, 4, 0.f);
    for (int x = 0; x < 8; ++x) {
        layer.color(x, 1) = {255, 255, 255, 255};
        layer.distance(x, 1) = 3.f;
        scene(x, 1) = x < 4 ? 2.f : x == 4 ? 3.f : 5.f;
    }
    scene(7, 1) = 0.f;  // unknown scene depth
    composite_layer(target, layer, &scene);
    for (int x = 0; x < 8; ++x) EXPECT_EQ(target(x, 1).r, x < 4 ? 0 : 255) << x;
    EXPECT_EQ(target(0, 0).r, 0);
}

class ComposeFixture : public ::testing::Test {
protected:
    static constexpr int kWidth = 512;

    void SetUp() override {
        cap = plane_capture(120, 90, 150.0, 2.0);
        src = source_of(cap);
        target = grey_target(kWidth);
    }

    PlacementSpec spec_at(double theta_deg, double phi_deg, Strategy s) const {
        PlacementSpec spec;
        spec.theta = deg_to_rad(theta_deg);
        spec.phi = deg_to_rad(phi_deg);
        spec.distance = 2.0;
        spec.strategy = s;
        return spec;
    }

    ComposeOptions options() const {
        ComposeOptions o;
        o.rig = {kBaseline};
        return o;
    }

    Capture cap;
    SourceObject src;
    StereoEquirect target;
};

TEST_F(ComposeFixture, KeyColumnOfOneEqualsPerColumn) {
    PlacementSpec key = spec_at(25, 10, Strategy::KeyColumn);
    key.key_columns = 1;
    const ComposeResult a = compose(target, src, key, options());
    const ComposeResult b = compose(target, src, spec_at(25, 10, Strategy::PerColumn), options());
    EXPECT_EQ(a.image, b.image);
}

TEST_F(ComposeFixture, OneOffStrategyDelegates) {
    const PlacementSpec spec = spec_at(-40, 5, Strategy::OneOff);
    EXPECT_EQ(compose(target, src, spec, options()).image, one_off_compose(target, src, spec, options()).image);
}

TEST_F(ComposeFixture, OneOffMatchesPerColumnInTheCentralColumns) {
    const ComposeResult per = compose(target, src, spec_at(0, 0, Strategy::PerColumn), options());
    const ComposeResult one = compose(target, src, spec_at(0, 0, Strategy::OneOff), options());
    std::vector<std::pair<Rgba8, RgbaF>> samples;
    for (int y = 0; y < kWidth / 2; ++y) {
        for (int x = kWidth / 2 - 10; x < kWidth / 2 + 10; ++x) {
            const Rgba8 p = per.left_layer.color(x, y);
            const Rgba8 o = one.left_layer.color(x, y);
            if (p.a < 255 || o.a < 255) continue;
            const Rgba8 pi = per.image.left(x, y);
            const Rgba8 oi = one.image.left(x, y);
            samples.push_back({pi, RgbaF{float(oi.r), float(oi.g), float(oi.b), 255.f}});
        }
    }
    ASSERT_GT(samples.size(), 500u);
    EXPECT_LT(rms_rgb(samples), 2.0);
}

// Topmost object row in one eye's layer.
int top_row(const EyeLayer& layer) {
    for (int y = 0; y < layer.color.height(); ++y) {
        for (int x = 0; x < layer.color.width(); ++x) {
            if (layer.color(x, y).a > 0) return y;
        }
    }
    return -1;
}

TEST_F(ComposeFixture, OneOffHasVerticalDisparityAtNinetyDegrees) {
    for (const double theta : {90.0, -90.0}) {
        PlacementSpec one = spec_at(theta, 15, Strategy::OneOff);
        one.distance = 1.0;
        PlacementSpec per = one;
        per.strategy = Strategy::PerColumn;
        const ComposeResult o = compose(target, src, one, options());
        const ComposeResult p = compose(target, src, per, options());

        // Analytic check on a matched point: the top-centre of the placed object.
        const ObjectPlacement placement(reference_point(src.cloud), one);
        const Point3 top = placement.to_world(backproject({60.5, 0.5}, cap.depth, cap.intr));
        const auto ol = o.plan.project(top, Eye::Left), orr = o.plan.project(top, Eye::Right);
        const auto pl = p.plan.project(top, Eye::Left), pr = p.plan.project(top, Eye::Right);
        ASSERT_TRUE(ol && orr && pl && pr);
        EXPECT_GT(std::abs(ol->row - orr->row), 2.0) << theta;
        EXPECT_LT(std::abs(pl->row - pr->row), 0.5) << theta;

        // and in the rendered layers
        EXPECT_GE(std::abs(top_row(o.left_layer) - top_row(o.right_layer)), 2) << theta;
        EXPECT_LE(std::abs(top_row(p.left_layer) - top_row(p.right_layer)), 1) << theta;
    }
}

TEST_F(ComposeFixture, EmptyCloudLeavesTargetUnchanged) {
    SourceObject empty = src;
    empty.cloud.points.clear();
    for (const Strategy s : {Strategy::PerColumn, Strategy::KeyColumn, Strategy::OneOff}) {
        EXPECT_EQ(compose(target, empty, spec_at(0, 0, s), options()).image, target);
    }
}

TEST_F(ComposeFixture, WritesStayWithinObjectExtentPlusMargin) {
    for (const Strategy s : {Strategy::PerColumn, Strategy::KeyColumn}) {
        const PlacementSpec spec = spec_at(120, -20, s);
        const ComposeResult r = compose(target, src, spec, options());
        const ObjectPlacement placement(reference_point(src.cloud), spec);
        double lo = 1e9, hi = -1e9;
        for (const auto& p : placement.place(src.cloud).points) {
            const double t = to_spherical(p.position).theta;
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        const double margin = kDefaultNeighborMarginRad;
        int touched = 0;
        for (int x = 0; x < kWidth; ++x) {
            bool changed = false;
            for (int y = 0; y < kWidth / 2 && !changed; ++y) {
                changed = r.image.left(x, y) != target.left(x, y) || r.image.right(x, y) != target.right(x, y);
            }
            if (!changed) continue;
            ++touched;
            const double t = equirect_column_theta(x, kWidth);
            EXPECT_GE(t, lo - margin) << x;
            EXPECT_LE(t, hi + margin) << x;
        }
        EXPECT_GT(touched, 10);
    }
}

TEST_F(ComposeFixture, SceneDepthOccludesObject) {
    const PlacementSpec spec = spec_at(0, 0, Strategy::KeyColumn);
    SceneDepth wall(kWidth, kWidth / 2, 1.0f);  // everything at 1 m, object at 2 m
    EXPECT_EQ(compose(target, src, spec, options(), &wall).image, target);
    SceneDepth far(kWidth, kWidth / 2, 10.0f);
    EXPECT_EQ(compose(target, src, spec, options(), &far).image, compose(target, src, spec, options()).image);
}

TEST_F(ComposeFixture, ThreadCountDoesNotChangeOutput) {
    ComposeOptions one = options(), many = options();
    one.threads = 1;
    many.threads = 4;
    const PlacementSpec spec = spec_at(-10, 20, Strategy::PerColumn);
    EXPECT_EQ(compose(target, src, spec, one).image, compose(target, src, spec, many).image);
}

TEST_F(ComposeFixture, PoissonBlendKeepsOutsidePixels) {
    PlacementSpec spec = spec_at(30, 0, Strategy::KeyColumn);
    spec.blend = BlendMode::Poisson;
    StereoEquirect textured = target;
    for (int y = 0; y < kWidth / 2; ++y) {
        for (int x = 0; x < kWidth; ++x) {
            const Rgba8 c{static_cast<uint8_t>(x / 3), static_cast<uint8_t>(y), 60, 255};
            textured.left(x, y) = c;
            textured.right(x, y) = c;
        }
    }
    const ComposeResult blended = compose(textured, src, spec, options());
    spec.blend = BlendMode::Overwrite;
    const ComposeResult plain = compose(textured, src, spec, options());
    int differs = 0;
    for (size_t i = 0; i < textured.left.size(); ++i) {
        if (plain.left_layer.color[i].a == 0) { ASSERT_EQ(blended.image.left[i], textured.left[i]); }
        if (blended.image.left[i] != plain.image.left[i]) ++differs;
    }
    EXPECT_GT(differs, 0);
}

TEST_F(ComposeFixture, InvalidPlacementRejected) {
    PlacementSpec spec = spec_at(0, 0, Strategy::KeyColumn);
    spec.key_columns = 4;
    EXPECT_THROW(compose(target, src, spec, options()), Error);
    spec = spec_at(0, 0, Strategy::PerColumn);
    spec.distance = -1;
    EXPECT_THROW(compose(target, src, spec, options()), Error);
}

// Ray-traced ODS render of the placed, textured plane: each column looks from
// its own rotated eye, and the colour comes straight from the texture function.
TEST(ComposeGroundTruth, TexturedPlaneMatchesDirectRender) {
    const int w = 1024, h = 512;
    const Capture cap = plane_capture(240, 180, 300.0, 2.0);
    const SourceObject src = source_of(cap);
    PlacementSpec spec;
    spec.theta = deg_to_rad(40);
    spec.phi = deg_to_rad(10);
    spec.distance = 2.5;
    ComposeOptions opts;
    opts.rig = {kBaseline};
    const StereoEquirect target = grey_target(w);
    const ComposeResult r = compose(target, src, spec, opts);
    const ObjectPlacement placement(reference_point(src.cloud), spec);

    for (const Eye eye : {Eye::Left, Eye::Right}) {
        std::vector<std::pair<Rgba8, RgbaF>> samples;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double theta = equirect_column_theta(x, w);
                const Point3 e = rotation_about_y(theta) * Point3{eye == Eye::Left ? -kBaseline / 2 : kBaseline / 2, 0, 0};
                const Point3 d = direction_of(theta, equirect_row_phi(y, h));
                const Point3 a = placement.to_source(e);
                const Point3 b = placement.to_source(e + d) - a;
                if (std::abs(b.z) < 1e-12) continue;
                const double t = (cap.depth - a.z) / b.z;
                if (t <= 0) continue;
                const PixelCoord uv = project_to_source(a + b * t, cap.intr);
                if (uv.col < 3 || uv.row < 3 || uv.col > 237 || uv.row > 177) continue;
                const Rgba8 got = (eye == Eye::Left ? r.image.left : r.image.right)(x, y);
                samples.push_back({got, texture(uv.col, uv.row)});
            }
        }
        ASSERT_GT(samples.size(), 5000u);
        EXPECT_LT(rms_rgb(samples), 2.0) << (eye == Eye::Left ? "left" : "right");
    }
}

TEST(Anaglyph, ChannelsFromEachEye) {
    StereoEquirect p{EquirectImage(4, 2, {10, 20, 30, 255}), EquirectImage(4, 2, {40, 50, 60, 255})};
    const auto a = anaglyph(p);
    EXPECT_EQ(a(0, 0), (Rgba8{10, 50, 60, 255}));
    const auto s = side_by_side(p);
    EXPECT_EQ(s.width(), 8);
    EXPECT_EQ(s(0, 1), (Rgba8{10, 20, 30, 255}));
    EXPECT_EQ(s(5, 1), (Rgba8{40, 50, 60, 255}));
}

TEST(RenderPlan, PerColumnProjectionMatchesTangentFormula) {
    RenderPlan plan;
    plan.width = 2048;
    plan.height = 1024;
    plan.rig = {kBaseline};
    for (int c = 0; c < plan.width; ++c) plan.camera_theta.push_back(equirect_column_theta(c, plan.width));
    plan.build_runs();
    test::Gen g(83);
    for (int i = 0; i < 2000; ++i) {
        const Point3 p = direction_of(g.uniform(-kPi, kPi), g.uniform(-1.2, 1.2)) * g.uniform(0.5, 20);
        const double r = std::hypot(p.x, p.z);
        for (const Eye eye : {Eye::Left, Eye::Right}) {
            const auto px = plan.project(p, eye);
            ASSERT_TRUE(px);
            const double s = eye == Eye::Left ? 1 : -1;
            const double theta = wrap_angle(std::atan2(p.x, p.z) + s * std::asin(kBaseline / 2 / r));
            const double want_col = (theta + kPi) * plan.width / kTwoPi;
            double dc = std::abs(px->col - want_col);
            dc = std::min(dc, plan.width - dc);
            // Columns are quantised to the column's own camera.
            ASSERT_LT(dc, 0.5 * kBaseline / r + 0.05);
            const double phi = std::atan2(p.y, std::sqrt(r * r - kBaseline * kBaseline / 4));
            ASSERT_NEAR(px->row, (kPi / 2 - phi) * plan.height / kPi, 0.05);
        }
    }
}

}  // namespace
}  // namespace ods
