#include "tasteprint/server.hpp"

#include <httplib.h>

#include <algorithm>

#include "tasteprint/errors.hpp"
#include "tasteprint/hash.hpp"

namespace tasteprint {

namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump() + "\n", kJson);
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                json extra = json::object()) {
    extra["error"] = code;
    extra["message"] = message;
    send_json(res, status, extra);
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body);  // parse_error -> 400
    if (!j.is_object()) throw FormatError("request body must be a JSON object");
    return j;
}

std::optional<long> body_version(const json& body) {
    if (body.contains("version") && !body["version"].is_null()) return body["version"].get<long>();
    return std::nullopt;
}

std::size_t layer_param(const httplib::Request& req) {
    const std::string& s = req.matches[1];
    try {
        return static_cast<std::size_t>(std::stoul(s));
    } catch (const std::exception&) {
        throw FormatError("bad layer index '" + s + "'");
    }
}

void check_layer(const ProjectState& st, std::size_t k) {
    if (!st.slices || k >= st.slices->layers.size())
        throw PlacementError("layer " + std::to_string(k) + " does not exist", k);
}

double standoff_or_default(const json& body, const ProjectState& st) {
    return body.contains("standoff_mm") ? body["standoff_mm"].get<double>() : st.profile.default_standoff_mm;
}

int duration_from(const json& body, const CalibrationSet& cal) {
    if (body.contains("duration_ms")) return body["duration_ms"].get<int>();
    if (body.contains("intensity")) return intensity_to_duration(body["intensity"].get<int>(), cal);
    throw FormatError("either duration_ms or intensity is required");
}

/// Runs `fn`, mapping library errors onto HTTP statuses.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const VersionConflictError& e) {
        send_error(res, 409, "version-conflict", e.what(), {{"current_version", e.current_version()}});
    } catch (const PlacementError& e) {
        send_error(res, 422, "placement", e.what(),
                   {{"layer", e.layer()},
                    {"diagnostics", json::array({{{"severity", "error"},
                                                  {"code", "outside-layer"},
                                                  {"message", e.what()},
                                                  {"layer", e.layer()}}})}});
    } catch (const ValidationError& e) {
        send_error(res, 422, "validation", e.what(), {{"diagnostics", e.diagnostics().to_json()}});
    } catch (const CapacityError& e) {
        send_error(res, 422, "capacity", e.what(), {{"achievable_mg", e.achievable_mass()}});
    } catch (const ParseError& e) {
        send_error(res, 400, "parse", e.what());
    } catch (const FormatError& e) {
        send_error(res, 400, "format", e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, "format", e.what());
    } catch (const IoError& e) {
        send_error(res, 500, "io", e.what());
    } catch (const Error& e) {
        send_error(res, 422, "invalid", e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

}  // namespace

struct Server::Impl {
    ProjectStore& store;
    httplib::Server http;

    explicit Impl(ProjectStore& s) : store(s) {
        // SO_REUSEPORT would let a second instance share the port unnoticed.
        http.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        routes();
    }

    std::shared_ptr<const ProjectState> loaded() {
        auto st = store.snapshot();
        if (!st->slices || !st->design) throw ValidationError("no mesh loaded");
        return st;
    }

    void routes() {
        http.Post("/api/mesh", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const double h = req.has_param("layer_height") ? std::stod(req.get_param_value("layer_height")) : 1.6;
                const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(req.body.data()),
                                                          req.body.size());
                const MeshFormat fmt = req.has_param("format") ? parse_format_name(req.get_param_value("format"))
                                                               : detect_format("upload.stl", bytes);
                Diagnostics diag;
                auto st = store.load_mesh(bytes, fmt, h, &diag);
                send_json(res, 201,
                          {{"mesh_ref", st->slices->mesh_ref},
                           {"layer_count", st->slices->layers.size()},
                           {"layer_height", st->slices->layer_height},
                           {"design_version", st->design->version},
                           {"diagnostics", diag.to_json()}});
            });
        });

        http.Get("/api/slices", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                auto st = store.snapshot();
                if (!st->slices) return send_error(res, 404, "not-found", "no mesh loaded");
                res.set_content(render_slices(*st->slices), kJson);
            });
        });

        http.Get("/api/design", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                auto st = store.snapshot();
                if (!st->design) return send_error(res, 404, "not-found", "no design");
                send_json(res, 200, to_json(*st->design));
            });
        });

        http.Put("/api/design", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                TasteDesign incoming = design_from_json(body);
                if (!body.contains("version")) throw FormatError("design document must carry its version");
                const TasteDesign d =
                    store.edit_design(incoming.version, [&](const TasteDesign&, const ProjectState&) { return incoming; });
                send_json(res, 200, to_json(d));
            });
        });

        http.Post(R"(/api/design/layers/(\d+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::size_t k = layer_param(req);
                const json body = parse_body(req);
                Diagnostics diag;
                const TasteDesign d = store.edit_design(body_version(body), [&](const TasteDesign& cur,
                                                                                const ProjectState& st) {
                    check_layer(st, k);
                    SprayEvent e;
                    e.channel = body.at("channel").get<int>();
                    e.position = {body.at("position").at(0).get<double>(), body.at("position").at(1).get<double>()};
                    e.duration_ms = duration_from(body, st.calibration);
                    e.standoff_mm = standoff_or_default(body, st);
                    return add_free_event(cur, k, e, st.slices->layers, st.calibration, &diag);
                });
                send_json(res, 201, {{"design", to_json(d)}, {"diagnostics", diag.to_json()}});
            });
        });

        http.Post("/api/design/pattern", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                Diagnostics diag;
                const TasteDesign d = store.edit_design(body_version(body), [&](const TasteDesign& cur,
                                                                                const ProjectState& st) {
                    const auto k = body.at("layer").get<std::size_t>();
                    check_layer(st, k);
                    return fill_pattern(cur, k, body.at("channel").get<int>(), duration_from(body, st.calibration),
                                        standoff_or_default(body, st), body.value("overlap", 0.0),
                                        st.slices->layers, st.calibration, &diag);
                });
                send_json(res, 200, {{"design", to_json(d)}, {"diagnostics", diag.to_json()}});
            });
        });

        http.Post("/api/design/allocate", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                Diagnostics diag;
                AllocationReport report;
                const bool preview = body.value("preview", false);
                auto allocate = [&](const TasteDesign& cur, const ProjectState& st) {
                    TasteDesign base = cur;
                    if (body.contains("weights")) {
                        const auto w = body["weights"].get<std::vector<double>>();
                        if (w.size() != base.layers.size()) throw FormatError("one weight per layer is required");
                        for (std::size_t k = 0; k < w.size(); ++k) base.layers[k].weight = w[k];
                    }
                    auto r = allocate_total_amount(base, body.at("channel").get<int>(),
                                                   body.at("total_mg").get<double>(), standoff_or_default(body, st),
                                                   st.slices->layers, st.calibration, &diag);
                    report = r.report;
                    return r.design;
                };
                if (preview) {
                    auto st = loaded();
                    const TasteDesign d = allocate(*st->design, *st);
                    send_json(res, 200, {{"design", to_json(d)}, {"report", to_json(report)},
                                         {"diagnostics", diag.to_json()}, {"committed", false}});
                    return;
                }
                const TasteDesign d = store.edit_design(body_version(body), allocate);
                send_json(res, 200, {{"design", to_json(d)}, {"report", to_json(report)},
                                     {"diagnostics", diag.to_json()}, {"committed", true}});
            });
        });

        http.Get("/api/calibration", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, to_json(store.snapshot()->calibration)); });
        });

        http.Post("/api/predict", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                auto st = store.snapshot();
                const int duration = duration_from(body, st->calibration);
                const double standoff = standoff_or_default(body, *st);
                Diagnostics diag;
                const double d = predict_diameter(st->calibration, standoff, duration, &diag);
                const double m = predict_mass(st->calibration, duration, &diag);
                send_json(res, 200,
                          {{"standoff_mm", standoff},
                           {"duration_ms", duration},
                           {"diameter_mm", d},
                           {"mass_mg", m},
                           {"extrapolated", diag.count("extrapolation") > 0},
                           {"diagnostics", diag.to_json()}});
            });
        });

        http.Post("/api/gcode", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                GcodeSettings settings;
                settings.infill_density = body.value("infill_density", settings.infill_density);
                if (body.contains("infill_spacing")) settings.infill_spacing = body["infill_spacing"].get<double>();
                const std::string text = store.generate(settings);
                const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
                send_json(res, 201, {{"bytes", text.size()}, {"lines", lines}, {"hash", content_hash(text)}});
            });
        });

        http.Get("/api/gcode/file", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                auto st = store.snapshot();
                if (!st->program) return send_error(res, 404, "not-found", "no G-code generated");
                res.set_header("Content-Disposition", "attachment; filename=\"program.gcode\"");
                res.set_content(*st->program, "text/x-gcode");
            });
        });

        http.Post("/api/simulate", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                SimulationOptions opt;
                opt.spread_factor = body.value("spread_factor", opt.spread_factor);
                opt.cell_size = body.value("cell_size", opt.cell_size);
                send_json(res, 200, store.simulate(opt));
            });
        });

        http.Get("/api/simulation", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                auto st = store.snapshot();
                if (!st->simulation) return send_error(res, 404, "not-found", "no simulation");
                send_json(res, 200, *st->simulation);
            });
        });

        http.Get(R"(/api/simulation/layers/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::size_t k = layer_param(req);
                auto st = store.snapshot();
                if (!st->simulation_result) return send_error(res, 404, "not-found", "no simulation maps in memory");
                for (const auto& m : st->simulation_result->maps)
                    if (m.layer_index == k) return send_json(res, 200, map_json(m));
                send_error(res, 404, "not-found", "no map for layer " + std::to_string(k));
            });
        });
    }
};

Server::Server(ProjectStore& store) : impl_(std::make_unique<Impl>(store)) {}
Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->http.bind_to_any_port(host);
        if (p <= 0) throw IoError("cannot bind " + host);
        return p;
    }
    if (!impl_->http.bind_to_port(host, port)) throw IoError("port " + std::to_string(port) + " is busy");
    return port;
}

void Server::listen() { impl_->http.listen_after_bind(); }
void Server::stop() {
    if (impl_) impl_->http.stop();
}
bool Server::running() const { return impl_->http.is_running(); }

}  // namespace tasteprint
