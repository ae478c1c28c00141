#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace ods {

struct ServiceOptions {
    std::filesystem::path output_dir = "ods_out";  // composite results go to <output_dir>/<session id>/
    std::filesystem::path input_dir;               // base for relative input paths; empty = working directory
    unsigned threads = 0;
};

// HTTP session service backing the interactive placement workflow.
//
//   POST /sessions                    {target:{left,right[,scene_depth]}, source:{left,disparity[,alpha]}[, camera:{focal_px,baseline_m}]}
//   PUT  /sessions/{id}/placement     {theta_deg, phi_deg, distance_m, scale, yaw_deg}
//   GET  /sessions/{id}/preview       ?mode=anaglyph|sbs&strategy=one-off|key-column|per-column
//   POST /sessions/{id}/composite     {strategy}
//   GET  /sessions/{id}/composite     job status
//   GET  /healthz
class Service {
public:
    explicit Service(ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds without serving; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    // Serves until stop(); call after bind().
    bool listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ods
