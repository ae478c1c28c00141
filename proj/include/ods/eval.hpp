#pragma once

#include <string>
#include <vector>

#include "ods/compose.hpp"
#include "ods/geometry.hpp"
#include "ods/placement.hpp"
#include "ods/raster.hpp"
#include "ods/reconstruction.hpp"

namespace ods {

inline constexpr double kDefaultBoardHfovRad = deg_to_rad(119.25);

struct ChessboardParams {
    int rows = 8;  // squares
    int cols = 11;
    double distance = 2.0;      // metres from the origin to the board centre
    double square_size = 0.0;   // metres; 0 = chosen so the board spans `hfov` when facing the viewer
    double hfov = kDefaultBoardHfovRad;
    double theta = 0.0;         // direction of the board centre
    double phi = 0.0;
};

// Planar board facing the origin. Corner (r, c) sits at origin + r*s*u + c*s*v,
// r in [0, rows], c in [0, cols]; u points down the board, v to the right.
struct ChessboardScene {
    int rows = 0;
    int cols = 0;
    double square_size = 0.0;
    double distance = 0.0;
    double theta = 0.0;
    double phi = 0.0;
    Point3 center;
    Point3 origin;
    Point3 u;
    Point3 v;
    Point3 normal;  // towards the origin

    Point3 corner(int r, int c) const { return origin + u * (r * square_size) + v * (c * square_size); }
    // The (rows-1) x (cols-1) corners where four squares meet, row-major.
    std::vector<Point3> interior_corners() const;
    // Board colour at a world point on the plane, or nullopt off the board.
    std::optional<Rgba8> colour_at(const Point3& p) const;
};

// Throws BadParams.
ChessboardScene make_chessboard(const ChessboardParams& params);

struct CornerPair {
    PixelCoord left;
    PixelCoord right;
};

struct GtRender {
    StereoEquirect image;
    std::vector<Point3> corners;
    std::vector<CornerPair> pixels;
};

inline constexpr Rgba8 kEvalBackground{128, 128, 128, 255};

// Exact ODS position of a world point: each eye sees it along the ray tangent to
// the viewing circle. Returns nullopt for points inside the circle.
std::optional<CornerPair> ods_project(const Point3& p, double baseline, int width, int height);

// Ray-traced ODS rendering of the board, 2x2 supersampled, plus analytic corner
// positions. Throws BadAspect.
GtRender render_gt_ods(const ChessboardScene& scene, const StereoRig& rig, int width, int height);

// Mean over corners of |d_method - d_gt| with d = (dcol, drow) between eyes;
// dcol is wrapped across the seam. Throws CountMismatch / EmptyInput.
double disparity_difference(const std::vector<CornerPair>& method, const std::vector<CornerPair>& gt, int width);

// A frontal synthetic capture of the board at its distance: image, constant
// disparity and full alpha. The board fills the frame exactly.
struct SyntheticCapture {
    PlanarImage image;
    DisparityMap disparity;
    Mask alpha;
    CameraIntrinsics intr;
};
SyntheticCapture capture_board(const ChessboardScene& scene, const StereoRig& rig, int image_width);

struct EvalPosition {
    double theta = 0.0;  // radians
    double phi = 0.0;
};

struct EvalConfig {
    std::vector<Strategy> strategies{Strategy::PerColumn, Strategy::KeyColumn, Strategy::OneOff};
    std::vector<EvalPosition> positions;  // empty = theta 0, phi in {-70, -35, 0, 35, 70} degrees
    int width = 1024;
    int key_columns = kDefaultKeyColumns;
    ChessboardParams board;
    StereoRig rig;
    int source_width = 0;  // 0 = about two source pixels per panorama pixel
    unsigned threads = 0;
};

struct EvalRow {
    Strategy strategy = Strategy::PerColumn;
    double theta = 0.0;
    double phi = 0.0;
    double mean_disparity_error_px = 0.0;
    size_t corners = 0;
    double seconds = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double seconds = 0.0;

    std::string csv() const;
    std::string markdown() const;
};

std::vector<EvalPosition> default_eval_positions();

// Composes the board with each strategy at each position and measures corner
// disparities against the analytic ODS ground truth.
EvalReport run_eval(const EvalConfig& config);

}  // namespace ods
