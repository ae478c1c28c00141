#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ods/compose.hpp"
#include "ods/placement.hpp"

namespace ods {

// One composition job. Paths are stored as given; relative ones resolve
// against `base_dir` (the config file's directory when loaded from disk).
struct JobConfig {
    struct Source {
        std::string left;       // RGBA PNG of the object (left view)
        std::string disparity;  // PFM, pixels; <= 0 or non-finite is invalid
        std::string alpha;      // optional PNG matte; empty = alpha channel of `left`
        bool operator==(const Source&) const = default;
    };
    struct Target {
        std::string left;
        std::string right;
        std::string scene_depth;  // optional equirect PFM of distances in metres
        bool operator==(const Target&) const = default;
    };
    struct Output {
        std::string left;
        std::string right;
        std::string side_by_side;  // optional
        std::string anaglyph;
        bool operator==(const Output&) const = default;
    };
    struct Placement {
        std::optional<double> theta_deg;
        std::optional<double> phi_deg;
        std::optional<double> distance_m;
        double scale = 1.0;
        double yaw_deg = 0.0;
        Point3 translation_m{};
        bool operator==(const Placement&) const = default;
    };

    Source source;
    Target target;
    Output output;
    Placement placement;
    double focal_px = kDefaultFocalPx;
    double baseline_m = kDefaultBaselineM;
    Strategy strategy = Strategy::PerColumn;
    BlendMode blend = BlendMode::Overwrite;
    int segments = 0;  // 0 until filled from the target width
    int key_columns = kDefaultKeyColumns;
    double neighbor_margin_deg = 3.0;
    unsigned threads = 0;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& p) const;
    PlacementSpec placement_spec() const;
    bool operator==(const JobConfig& o) const;
};

// Parses and validates a JSON config. When `check_files` is set, every referenced
// input must exist and `segments` defaults to the target width read from its
// PNG header. Throws ParseError / ValidationError naming the field path.
JobConfig parse_job(const std::string& json_text, const std::filesystem::path& base_dir, bool check_files = true);
JobConfig load_job(const std::filesystem::path& path);
std::string job_to_json(const JobConfig& job);
void save_job(const std::filesystem::path& path, const JobConfig& job);

// Runs the job and writes its outputs. Exit codes: 0 success, 2 unreadable or
// invalid input, 3 composition failure, 4 output failure. Progress and stage
// timings go to `log`, errors to `err`.
int cli_compose(const JobConfig& job, std::ostream& log, std::ostream& err);

// Writes a small chessboard scene (object capture, target pair, job.json) into
// `dir` and returns the job path.
std::filesystem::path make_fixture(const std::filesystem::path& dir, int pano_width = 512);

}  // namespace ods
