#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ods/densify.hpp"
#include "ods/placement.hpp"
#include "ods/poisson.hpp"
#include "ods/raster.hpp"
#include "ods/reconstruction.hpp"
#include "ods/segmentation.hpp"

namespace ods {

enum class Eye { Left, Right };

// The captured object: its left view, alpha, intrinsics and reconstructed cloud
// (capture frame).
struct SourceObject {
    PlanarImage image;  // alpha channel holds the object alpha
    CameraIntrinsics intr;
    PointCloud cloud;
};

// Reconstructs the cloud and folds `alpha` into the image's alpha channel.
SourceObject make_source_object(const PlanarImage& left, const DisparityMap& disp, const Mask& alpha,
                                const CameraIntrinsics& intr, const StereoRig& rig);

// Equirect-layout scene distances in metres; values <= 0 are unknown.
using SceneDepth = Raster<float>;

// Synthesised planar images for one view segment.
struct SynthesizedView {
    PlanarImage left;
    PlanarImage right;
    DenseResult dense_left;
    DenseResult dense_right;
    ViewIntrinsics intr;
    CameraPair pair;
};

struct ColumnRange {
    int first = 0;  // raster columns [first, last)
    int last = 0;
};

struct SourceHits {
    size_t total = 0;
    size_t outside = 0;
};

// Colours every mask > 0 pixel by backprojecting through its eye, undoing the
// placement and sampling the source. Only raster columns in `columns` are
// coloured when given. Throws OutOfSource when more than half the mask pixels
// fall outside the source frame, unless `hits` is given, in which case the
// counts are added there and the caller decides.
SynthesizedView synthesize_view_pair(const DenseResult& dense_left, const DenseResult& dense_right,
                                     const SourceObject& source, const ObjectPlacement& placement,
                                     const CameraPair& pair, const ViewIntrinsics& intr,
                                     std::optional<ColumnRange> columns = std::nullopt, SourceHits* hits = nullptr);

// Object colour and eye distance rendered into equirect layout, before compositing.
struct EyeLayer {
    Raster<Rgba8> color;
    Raster<float> distance;  // metres from the eye along the pixel ray, 0 where empty

    EyeLayer() = default;
    EyeLayer(int width, int height) : color(width, height), distance(width, height, 0.f) {}
};

// Target columns whose centre azimuth lies in [theta_lo, theta_hi).
std::vector<int> columns_in_interval(double theta_lo, double theta_hi, int width);

// Renders the segment's target columns for one eye into `layer`.
void render_view_columns(EyeLayer& layer, const SynthesizedView& view, Eye eye, double theta_lo, double theta_hi);

// Occlusion-tests and alpha-composites `layer` over `target` (straight-alpha over).
void composite_layer(Raster<Rgba8>& target, const EyeLayer& layer, const SceneDepth* scene_depth);

// Writes the segment's columns of both eyes into the target.
void compose_columns(StereoEquirect& target, const SynthesizedView& view, const ViewSegment& seg,
                     const SceneDepth* scene_depth);

// Visible iff no scene depth or object_z <= scene_z (the object wins ties).
bool occlusion_test(double object_z, std::optional<double> scene_z);

// Straight-alpha "over".
Rgba8 over(const Rgba8& src, const Rgba8& dst);

// Which camera each target column was rendered from; lets callers find where a
// 3D point lands in the composed output.
struct RenderPlan {
    struct Run {
        int first = 0;  // first column; runs may wrap past the seam
        int count = 0;
        double theta = 0.0;
    };

    Strategy strategy = Strategy::PerColumn;
    int width = 0;
    int height = 0;
    StereoRig rig;
    std::vector<double> camera_theta;  // per column; NaN where no camera was used
    std::vector<Run> runs;             // filled by build_runs()

    // Groups consecutive columns sharing a camera.
    void build_runs();
    Point3 eye_center(double camera_theta, Eye eye) const;
    // Continuous equirect position of world point p in the given eye, or nullopt
    // when no column was rendered.
    std::optional<PixelCoord> project(const Point3& p, Eye eye) const;
};

struct ComposeOptions {
    StereoRig rig;
    int segments = 0;  // per-column interval count, 0 = target width
    double neighbor_margin = kDefaultNeighborMarginRad;
    double min_view_fov = kMinViewFovRad;
    double raster_oversample = 2.0;  // view raster density relative to the target
    std::shared_ptr<const Densifier> densifier;  // defaults to InterpolationDensifier
    PoissonOptions poisson;
    unsigned threads = 0;
};

struct StageTimings {
    double project_s = 0.0;
    double densify_s = 0.0;
    double synthesize_s = 0.0;
    double render_s = 0.0;
    double blend_s = 0.0;
    double composite_s = 0.0;
    int views = 0;
};

struct ComposeResult {
    StereoEquirect image;
    RenderPlan plan;
    EyeLayer left_layer;
    EyeLayer right_layer;
    StageTimings timings;
};

// Full composition with the strategy and blend mode from `placement`.
ComposeResult compose(const StereoEquirect& target, const SourceObject& source, const PlacementSpec& placement,
                      const ComposeOptions& options = {}, const SceneDepth* scene_depth = nullptr);

// Baseline: a single fixed camera pair at (-+B/2, 0, 0) projects the whole cloud
// straight into each equirect view.
ComposeResult one_off_compose(const StereoEquirect& target, const SourceObject& source,
                              const PlacementSpec& placement, const ComposeOptions& options = {},
                              const SceneDepth* scene_depth = nullptr);

// Red = left, green and blue = right.
Raster<Rgba8> anaglyph(const StereoEquirect& pair);
// Left and right side by side.
Raster<Rgba8> side_by_side(const StereoEquirect& pair);

}  // namespace ods
