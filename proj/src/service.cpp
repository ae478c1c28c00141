#include "ods/service.hpp"

#include <atomic>
#include <cmath>
#include <httplib.h>
#include <json.hpp>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "ods/compose.hpp"
#include "ods/error.hpp"
#include "ods/io.hpp"

namespace ods {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct HttpError {
    int status;
    std::string message;
};

struct Session {
    std::string id;
    StereoEquirect target;
    SourceObject source;
    std::optional<SceneDepth> scene_depth;
    StereoRig rig;

    std::mutex mutex;  // guards everything below
    PlacementSpec placement;
    uint64_t version = 0;
    std::map<std::string, std::shared_ptr<const std::string>> previews;  // keyed by version/mode/strategy
    std::string job_status = "idle";
    std::string job_error;
    Json job_outputs = Json::object();
    std::jthread worker;
};

Json parse_body(const httplib::Request& req) {
    try {
        Json j = Json::parse(req.body.empty() ? std::string("{}") : req.body);
        if (!j.is_object()) throw HttpError{400, "request body must be a JSON object"};
        return j;
    } catch (const Json::parse_error& e) {
        throw HttpError{400, std::string("malformed JSON: ") + e.what()};
    }
}

std::string required_string(const Json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) {
        throw HttpError{422, where + "." + key + " is required"};
    }
    return it->get<std::string>();
}

std::optional<double> optional_number(const Json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number() || !std::isfinite(it->get<double>())) throw HttpError{422, std::string(key) + " must be a number"};
    return it->get<double>();
}

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

struct Service::Impl {
    ServiceOptions options;
    httplib::Server server;
    std::mutex sessions_mutex;
    std::map<std::string, std::shared_ptr<Session>> sessions;
    std::atomic<uint64_t> next_id{1};

    explicit Impl(ServiceOptions opts) : options(std::move(opts)) { routes(); }

    fs::path input_path(const std::string& p) const {
        const fs::path path(p);
        return path.is_absolute() || options.input_dir.empty() ? path : options.input_dir / path;
    }

    std::shared_ptr<Session> find(const std::string& id) {
        std::lock_guard lock(sessions_mutex);
        const auto it = sessions.find(id);
        if (it == sessions.end()) throw HttpError{404, "unknown session " + id};
        return it->second;
    }

    template <typename Fn>
    httplib::Server::Handler guarded(Fn fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const HttpError& e) {
                send_json(res, e.status, {{"error", e.message}});
            } catch (const Error& e) {
                send_json(res, 422, {{"error", e.what()}});
            } catch (const std::exception& e) {
                send_json(res, 500, {{"error", e.what()}});
            }
        };
    }

    void create_session(const httplib::Request& req, httplib::Response& res) {
        const Json body = parse_body(req);
        const auto tgt = body.find("target");
        const auto src = body.find("source");
        if (tgt == body.end() || !tgt->is_object()) throw HttpError{422, "target is required"};
        if (src == body.end() || !src->is_object()) throw HttpError{422, "source is required"};

        auto s = std::make_shared<Session>();
        CameraIntrinsics intr;
        if (const auto cam = body.find("camera"); cam != body.end() && cam->is_object()) {
            intr.f = optional_number(*cam, "focal_px").value_or(kDefaultFocalPx);
            s->rig.baseline = optional_number(*cam, "baseline_m").value_or(kDefaultBaselineM);
        }
        try {
            s->rig.validate();
        } catch (const Error& e) {
            throw HttpError{422, e.what()};
        }

        s->target.left = EquirectImage(read_png(input_path(required_string(*tgt, "left", "target"))));
        s->target.right = EquirectImage(read_png(input_path(required_string(*tgt, "right", "target"))));
        if (!(s->target.left.same_shape(s->target.right))) throw HttpError{422, "target left and right differ in size"};
        if (const auto d = tgt->find("scene_depth"); d != tgt->end() && d->is_string() && !d->get<std::string>().empty()) {
            s->scene_depth = read_pfm(input_path(d->get<std::string>()));
            if (!s->scene_depth->same_shape(s->target.left)) throw HttpError{422, "scene depth differs in size from target"};
        }
        const PlanarImage left = read_png(input_path(required_string(*src, "left", "source")));
        const DisparityMap disp(read_pfm(input_path(required_string(*src, "disparity", "source"))));
        Mask alpha = alpha_from_image(left);
        if (const auto a = src->find("alpha"); a != src->end() && a->is_string() && !a->get<std::string>().empty()) {
            const Raster<Rgba8> matte = read_png(input_path(a->get<std::string>()));
            if (!matte.same_shape(left)) throw HttpError{422, "source alpha differs in size from source image"};
            for (size_t i = 0; i < matte.size(); ++i) alpha[i] = matte[i].r / 255.f;
        }
        intr.width = left.width();
        intr.height = left.height();
        s->source = make_source_object(left, disp, alpha, intr, s->rig);

        s->id = "s" + std::to_string(next_id.fetch_add(1));
        {
            std::lock_guard lock(sessions_mutex);
            sessions[s->id] = s;
        }
        send_json(res, 201, {{"session_id", s->id}});
    }

    void put_placement(const httplib::Request& req, httplib::Response& res) {
        const auto s = find(req.matches[1]);
        const Json body = parse_body(req);
        PlacementSpec spec;
        if (const auto t = optional_number(body, "theta_deg")) {
            if (std::abs(*t) > 360.0) throw HttpError{422, "theta_deg must lie in [-360, 360]"};
            spec.theta = deg_to_rad(*t);
        }
        if (const auto p = optional_number(body, "phi_deg")) spec.phi = deg_to_rad(*p);
        spec.distance = optional_number(body, "distance_m");
        spec.transform.scale = optional_number(body, "scale").value_or(1.0);
        spec.transform.yaw = deg_to_rad(optional_number(body, "yaw_deg").value_or(0.0));
        try {
            spec.validate();
        } catch (const Error& e) {
            throw HttpError{422, e.what()};
        }
        uint64_t version = 0;
        {
            std::lock_guard lock(s->mutex);
            const bool changed = spec.theta != s->placement.theta || spec.phi != s->placement.phi ||
                                 spec.distance != s->placement.distance ||
                                 spec.transform.scale != s->placement.transform.scale ||
                                 spec.transform.yaw != s->placement.transform.yaw;
            if (changed) {
                s->placement = spec;
                ++s->version;
                s->previews.clear();
            }
            version = s->version;
        }
        send_json(res, 200, {{"ok", true}, {"version", version}});
    }

    void get_preview(const httplib::Request& req, httplib::Response& res) {
        const auto s = find(req.matches[1]);
        const std::string mode = req.has_param("mode") ? req.get_param_value("mode") : "anaglyph";
        if (mode != "anaglyph" && mode != "sbs") throw HttpError{400, "mode must be anaglyph or sbs"};
        Strategy strategy = Strategy::OneOff;
        if (req.has_param("strategy")) {
            try {
                strategy = parse_strategy(req.get_param_value("strategy"));
            } catch (const Error& e) {
                throw HttpError{400, e.what()};
            }
        }

        PlacementSpec spec;
        uint64_t version = 0;
        std::string key;
        {
            std::lock_guard lock(s->mutex);
            spec = s->placement;
            version = s->version;
            key = std::to_string(version) + "/" + mode + "/" + to_string(strategy);
            if (const auto it = s->previews.find(key); it != s->previews.end()) {
                res.set_content(*it->second, "image/png");
                return;
            }
        }
        spec.strategy = strategy;
        ComposeOptions opts;
        opts.rig = s->rig;
        opts.threads = options.threads;
        const ComposeResult out =
            compose(s->target, s->source, spec, opts, s->scene_depth ? &*s->scene_depth : nullptr);
        const std::vector<uint8_t> png = encode_png(mode == "sbs" ? side_by_side(out.image) : anaglyph(out.image));
        auto bytes = std::make_shared<const std::string>(png.begin(), png.end());
        {
            std::lock_guard lock(s->mutex);
            if (s->version == version) s->previews.emplace(key, bytes);
        }
        res.set_content(*bytes, "image/png");
    }

    void post_composite(const httplib::Request& req, httplib::Response& res) {
        const auto s = find(req.matches[1]);
        const Json body = parse_body(req);
        Strategy strategy = Strategy::PerColumn;
        if (const auto it = body.find("strategy"); it != body.end()) {
            if (!it->is_string()) throw HttpError{422, "strategy must be a string"};
            try {
                strategy = parse_strategy(it->get<std::string>());
            } catch (const Error& e) {
                throw HttpError{422, e.what()};
            }
        }
        const fs::path dir = options.output_dir / s->id;
        const Json outputs = {{"left", (dir / "left.png").string()},
                              {"right", (dir / "right.png").string()},
                              {"anaglyph", (dir / "anaglyph.png").string()},
                              {"side_by_side", (dir / "side_by_side.png").string()}};
        std::lock_guard lock(s->mutex);
        if (s->job_status == "running") throw HttpError{409, "a composite is already running for this session"};
        PlacementSpec spec = s->placement;
        spec.strategy = strategy;
        s->job_status = "running";
        s->job_error.clear();
        s->job_outputs = outputs;
        if (s->worker.joinable()) s->worker.join();
        const unsigned threads = options.threads;
        Session* session = s.get();
        s->worker = std::jthread([session, spec, outputs, threads] {
            std::string status = "done";
            std::string error;
            try {
                ComposeOptions opts;
                opts.rig = session->rig;
                opts.threads = threads;
                const ComposeResult out = compose(session->target, session->source, spec, opts,
                                                  session->scene_depth ? &*session->scene_depth : nullptr);
                write_png(outputs["left"].get<std::string>(), out.image.left);
                write_png(outputs["right"].get<std::string>(), out.image.right);
                write_png(outputs["anaglyph"].get<std::string>(), anaglyph(out.image));
                write_png(outputs["side_by_side"].get<std::string>(), side_by_side(out.image));
            } catch (const std::exception& e) {
                status = "failed";
                error = e.what();
            }
            std::lock_guard done(session->mutex);
            session->job_status = status;
            session->job_error = error;
        });
        send_json(res, 202, {{"status", "running"}, {"outputs", outputs}});
    }

    void get_composite(const httplib::Request& req, httplib::Response& res) {
        const auto s = find(req.matches[1]);
        std::lock_guard lock(s->mutex);
        Json body = {{"status", s->job_status}, {"outputs", s->job_outputs}};
        if (!s->job_error.empty()) body["error"] = s->job_error;
        send_json(res, 200, body);
    }

    void routes() {
        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok", "text/plain");
        });
        server.Post("/sessions", guarded([this](const auto& req, auto& res) { create_session(req, res); }));
        server.Put(R"(/sessions/([^/]+)/placement)",
                   guarded([this](const auto& req, auto& res) { put_placement(req, res); }));
        server.Get(R"(/sessions/([^/]+)/preview)", guarded([this](const auto& req, auto& res) { get_preview(req, res); }));
        server.Post(R"(/sessions/([^/]+)/composite)",
                    guarded([this](const auto& req, auto& res) { post_composite(req, res); }));
        server.Get(R"(/sessions/([^/]+)/composite)",
                   guarded([this](const auto& req, auto& res) { get_composite(req, res); }));
    }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() {
    stop();
    // Sessions join their composite workers as they are destroyed.
}

int Service::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::listen() { return impl_->server.listen_after_bind(); }

void Service::stop() { impl_->server.stop(); }

}  // namespace ods
