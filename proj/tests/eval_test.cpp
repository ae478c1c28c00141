#include <gtest/gtest.h>

#include <algorithm>

#include "ods/error.hpp"
#include "ods/eval.hpp"
#include "support.hpp"

namespace ods {
namespace {

// Brute force: the eye angle alpha whose eye position sees p straight along alpha.
double brute_force_eye_angle(const Point3& p, double side, double guess) {
    auto f = [&](double a) {
        const Point3 e = rotation_about_y(a) * Point3{side, 0, 0};
        const Point3 v = p - e;
        return std::remainder(std::atan2(v.x, v.z) - a, kTwoPi);
    };
    double lo = guess - 0.5, hi = guess + 0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((f(lo) < 0) == (f(mid) < 0)) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

TEST(Chessboard, TwoByTwoHasOneCentralCorner) {
    ChessboardParams p;
    p.rows = 2;
    p.cols = 2;
    p.distance = 5;
    p.theta = 0.4;
    p.phi = -0.2;
    const ChessboardScene s = make_chessboard(p);
    const auto corners = s.interior_corners();
    ASSERT_EQ(corners.size(), 1u);
    const auto dir = to_spherical(corners[0]);
    EXPECT_NEAR(dir.theta, 0.4, 1e-12);
    EXPECT_NEAR(dir.phi, -0.2, 1e-12);
    EXPECT_NEAR(dir.rho, 5, 1e-12);
}

TEST(Chessboard, DefaultBoardSubtendsItsFov) {
    const ChessboardScene s = make_chessboard({});
    EXPECT_EQ(s.rows, 8);
    EXPECT_EQ(s.cols, 11);
    const Point3 left_edge = s.center - s.v * (s.cols * s.square_size / 2);
    const Point3 right_edge = s.center + s.v * (s.cols * s.square_size / 2);
    const double angle = std::acos(left_edge.dot(right_edge) / (left_edge.norm() * right_edge.norm()));
    EXPECT_NEAR(rad_to_deg(angle), 119.25, 1e-9);
}

TEST(Chessboard, CornersFollowThePlaneParametrisation) {
    test::Gen g(91);
    for (int trial = 0; trial < 50; ++trial) {
        ChessboardParams p;
        p.rows = g.integer(2, 12);
        p.cols = g.integer(2, 12);
        p.distance = g.uniform(0.5, 10);
        p.theta = g.uniform(-kPi, kPi);
        p.phi = g.uniform(-1.4, 1.4);
        const ChessboardScene s = make_chessboard(p);
        ASSERT_NEAR(s.u.dot(s.v), 0.0, 1e-12);
        ASSERT_NEAR(s.u.norm(), 1.0, 1e-12);
        ASSERT_NEAR(s.normal.dot(s.u), 0.0, 1e-12);
        ASSERT_LT(s.normal.dot(s.center), 0.0);  // faces the origin
        for (int r = 0; r <= p.rows; ++r) {
            for (int c = 0; c <= p.cols; ++c) {
                const Point3 want = s.origin + s.u * (r * s.square_size) + s.v * (c * s.square_size);
                ASSERT_LT((s.corner(r, c) - want).norm(), 1e-12);
                ASSERT_NEAR((s.corner(r, c) - s.center).dot(s.normal), 0.0, 1e-9);
            }
        }
    }
}

TEST(Chessboard, BadParamsThrow) {
    ChessboardParams p;
    p.rows = 1;
    EXPECT_THROW(make_chessboard(p), Error);
    p = {};
    p.distance = 0;
    EXPECT_THROW(make_chessboard(p), Error);
}

TEST(OdsProject, StraightAheadCornerMatchesBruteForce) {
    const double b = 0.12;
    for (const double z : {0.5, 1.0, 2.0, 7.0}) {
        const Point3 p{0, 0, z};
        const auto px = ods_project(p, b, 2048, 1024);
        ASSERT_TRUE(px);
        EXPECT_DOUBLE_EQ(px->left.row, px->right.row);
        const double al = brute_force_eye_angle(p, -b / 2, 0);
        const double ar = brute_force_eye_angle(p, b / 2, 0);
        EXPECT_NEAR(px->left.col, (al + kPi) * 2048 / kTwoPi, 1e-6);
        EXPECT_NEAR(px->right.col, (ar + kPi) * 2048 / kTwoPi, 1e-6);
        EXPECT_GT(px->left.col, px->right.col);
    }
}

TEST(OdsProject, AnyPointMatchesBruteForce) {
    test::Gen g(92);
    const double b = 0.2;
    for (int i = 0; i < 2000; ++i) {
        const Point3 p = direction_of(g.uniform(-3, 3), g.uniform(-1.3, 1.3)) * g.uniform(0.5, 20);
        if (std::hypot(p.x, p.z) < 0.2) continue;
        const auto px = ods_project(p, b, 1024, 512);
        ASSERT_TRUE(px);
        const double t = std::atan2(p.x, p.z);
        const double al = brute_force_eye_angle(p, -b / 2, t);
        double want = (wrap_angle(al) + kPi) * 1024 / kTwoPi;
        ASSERT_NEAR(std::remainder(px->left.col - want, 1024.0), 0.0, 1e-6);
        // elevation as seen from that eye
        const Point3 v = p - rotation_about_y(al) * Point3{-b / 2, 0, 0};
        const double phi = std::atan2(v.y, std::hypot(v.x, v.z));
        ASSERT_NEAR(px->left.row, (kPi / 2 - phi) * 512 / kPi, 1e-6);
        ASSERT_EQ(px->left.row, px->right.row);
    }
    EXPECT_FALSE(ods_project({0.01, 0, 0.01}, b, 1024, 512));
}

TEST(RenderGt, ZeroBaselineGivesIdenticalEyes) {
    ChessboardParams p;
    p.theta = 0.3;
    const GtRender gt = render_gt_ods(make_chessboard(p), {0.0}, 256, 128);
    EXPECT_EQ(gt.image.left, gt.image.right);
    // and the board is actually there
    EXPECT_NE(gt.image.left, EquirectImage(256, 128, kEvalBackground));
}

TEST(RenderGt, CornerPixelsSitOnCheckerCorners) {
    ChessboardParams p;
    p.phi = deg_to_rad(20);
    const ChessboardScene s = make_chessboard(p);
    const GtRender gt = render_gt_ods(s, {0.12}, 1024, 512);
    ASSERT_EQ(gt.pixels.size(), 70u);
    int checked = 0;
    for (const CornerPair& c : gt.pixels) {
        for (const auto& [img, px] : {std::pair{&gt.image.left, c.left}, std::pair{&gt.image.right, c.right}}) {
            const int x = static_cast<int>(std::lround(px.col)), y = static_cast<int>(std::lround(px.row));
            // the four diagonal neighbours two pixels out alternate dark/light
            const int a = (*img)(x - 2, y - 2).r, b = (*img)(x + 1, y - 2).r;
            const int d = (*img)(x - 2, y + 1).r, e = (*img)(x + 1, y + 1).r;
            if (std::abs(a - e) > 30 || std::abs(b - d) > 30) continue;  // steep perspective near the poles
            EXPECT_GT(std::abs(a - b), 150);
            ++checked;
        }
    }
    EXPECT_GT(checked, 100);
}

TEST(RenderGt, EquatorialCornersHaveNoVerticalDisparity) {
    const GtRender gt = render_gt_ods(make_chessboard({}), {0.12}, 512, 256);
    for (const CornerPair& c : gt.pixels) EXPECT_EQ(c.left.row, c.right.row);
}

TEST(RenderGt, DoublingDistanceShrinksDisparity) {
    ChessboardParams near;
    near.distance = 1.5;
    near.square_size = 0.1;
    ChessboardParams far = near;
    far.distance = 3.0;
    const GtRender a = render_gt_ods(make_chessboard(near), {0.12}, 512, 256);
    const GtRender b = render_gt_ods(make_chessboard(far), {0.12}, 512, 256);
    ASSERT_EQ(a.pixels.size(), b.pixels.size());
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        EXPECT_LT(std::abs(b.pixels[i].left.col - b.pixels[i].right.col),
                  std::abs(a.pixels[i].left.col - a.pixels[i].right.col));
    }
}

TEST(RenderGt, RejectsBadAspect) { EXPECT_THROW(render_gt_ods(make_chessboard({}), {0.12}, 300, 100), Error); }

std::vector<CornerPair> random_pairs(test::Gen& g, size_t n) {
    std::vector<CornerPair> v(n);
    for (auto& c : v) {
        c.left = {g.uniform(0, 1024), g.uniform(0, 512)};
        c.right = {g.uniform(0, 1024), g.uniform(0, 512)};
    }
    return v;
}

TEST(DisparityDifference, Examples) {
    test::Gen g(93);
    const auto gt = random_pairs(g, 30);
    EXPECT_EQ(disparity_difference(gt, gt, 1024), 0.0);
    auto shifted = gt;
    for (auto& c : shifted) c.left.col += 1.0;
    EXPECT_NEAR(disparity_difference(shifted, gt, 1024), 1.0, 1e-9);
    EXPECT_THROW(disparity_difference(gt, random_pairs(g, 29), 1024), Error);
    EXPECT_THROW(disparity_difference({}, {}, 1024), Error);
}

TEST(DisparityDifference, MatchesNaiveLoopAndIsPermutationInvariant) {
    test::Gen g(94);
    for (int trial = 0; trial < 100; ++trial) {
        const size_t n = static_cast<size_t>(g.integer(1, 80));
        auto gt = random_pairs(g, n);
        for (auto& c : gt) c.right.col = c.left.col - g.uniform(0, 5);
        auto method = gt;
        for (auto& c : method) {
            c.left.col += g.uniform(-2, 2);
            c.right.row += g.uniform(-2, 2);
        }
        double sum = 0;
        for (size_t i = 0; i < n; ++i) {
            const double dc = (method[i].left.col - method[i].right.col) - (gt[i].left.col - gt[i].right.col);
            const double dr = (method[i].left.row - method[i].right.row) - (gt[i].left.row - gt[i].right.row);
            sum += std::sqrt(dc * dc + dr * dr);
        }
        ASSERT_NEAR(disparity_difference(method, gt, 1024), sum / static_cast<double>(n), 1e-9);

        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), g.engine());
        std::vector<CornerPair> m2, g2;
        for (const size_t i : order) {
            m2.push_back(method[i]);
            g2.push_back(gt[i]);
        }
        ASSERT_NEAR(disparity_difference(m2, g2, 1024), disparity_difference(method, gt, 1024), 1e-12);
    }
}

TEST(DisparityDifference, WrapsAcrossTheSeam) {
    const std::vector<CornerPair> gt{{{0.5, 10}, {1023.5, 10}}};
    const std::vector<CornerPair> same{{{1.5, 10}, {0.5, 10}}};
    EXPECT_NEAR(disparity_difference(same, gt, 1024), 0.0, 1e-12);
}

TEST(CaptureBoard, FillsFrameWithConstantDisparity) {
    const ChessboardScene s = make_chessboard({});
    const SyntheticCapture cap = capture_board(s, {0.12}, 440);
    EXPECT_EQ(cap.intr.width, 440);
    EXPECT_EQ(cap.intr.height, 320);
    // frame edges back-project onto the board edges
    const Point3 corner = backproject({0, 0}, s.distance, cap.intr);
    EXPECT_NEAR(corner.x, -s.cols * s.square_size / 2, 1e-12);
    EXPECT_NEAR(cap.disparity(7, 7), cap.intr.f * 0.12 / s.distance, 1e-4);
}

TEST(RunEval, SinglePositionSingleStrategy) {
    EvalConfig cfg;
    cfg.strategies = {Strategy::PerColumn};
    cfg.positions = {{0.0, 0.0}};
    cfg.width = 256;
    const EvalReport rep = run_eval(cfg);
    ASSERT_EQ(rep.rows.size(), 1u);
    EXPECT_EQ(rep.rows[0].corners, 70u);
    EXPECT_GE(rep.rows[0].mean_disparity_error_px, 0.0);
    EXPECT_EQ(rep.csv().substr(0, rep.csv().find('\n')), "strategy,theta_deg,phi_deg,mean_disparity_error_px");
    EXPECT_NE(rep.markdown().find("per-column"), std::string::npos);
}

TEST(RunEval, OrderingAtSmallScale) {
    EvalConfig cfg;
    cfg.positions = {{0.0, deg_to_rad(35)}};
    cfg.width = 512;
    const EvalReport rep = run_eval(cfg);
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_LE(rep.rows[0].mean_disparity_error_px, rep.rows[1].mean_disparity_error_px);
    EXPECT_LE(rep.rows[1].mean_disparity_error_px, rep.rows[2].mean_disparity_error_px);
    EXPECT_GE(rep.rows[2].mean_disparity_error_px, 2 * rep.rows[0].mean_disparity_error_px);
}

}  // namespace
}  // namespace ods
