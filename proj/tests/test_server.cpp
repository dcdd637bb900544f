#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <thread>

#include "support.hpp"
#include "tasteprint/errors.hpp"
#include "tasteprint/hash.hpp"
#include "tasteprint/server.hpp"

using namespace tasteprint;
using namespace fixtures;
using nlohmann::json;

namespace {

/// Server on an ephemeral port, torn down with the fixture.
struct Running {
    ProjectStore store;
    Server server;
    int port = 0;
    std::thread thread;

    explicit Running(const std::filesystem::path& dir) : store(dir), server(store) {
        port = server.bind("127.0.0.1", 0);
        thread = std::thread([this] { server.listen(); });
        for (int i = 0; i < 200 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ~Running() {
        server.stop();
        thread.join();
    }
    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

std::string body_of(const std::vector<std::uint8_t>& b) { return {b.begin(), b.end()}; }

json post(httplib::Client& c, const std::string& path, const json& body, int expect) {
    auto r = c.Post(path, body.dump(), "application/json");
    REQUIRE(r);
    CHECK_MESSAGE(r->status == expect, r->body);
    return r->body.empty() ? json() : json::parse(r->body);
}

}  // namespace

TEST_CASE("service round trip") {
    TempDir dir("srv");
    std::string gcode_text;
    long version = 0;
    {
        Running srv(dir.path());
        auto c = srv.client();

        auto none = c.Get("/api/slices");
        REQUIRE(none);
        CHECK(none->status == 404);

        const auto stl = to_binary_stl(make_box({40, 40, 0}, {70, 70, 32}));
        auto up = c.Post("/api/mesh?format=stl_binary&layer_height=1.6", body_of(stl), "application/octet-stream");
        REQUIRE(up);
        REQUIRE(up->status == 201);
        const json meta = json::parse(up->body);
        CHECK(meta.at("layer_count") == 20);
        CHECK(meta.at("mesh_ref") == block_stack().mesh_ref);
        version = meta.at("design_version").get<long>();

        auto sl = c.Get("/api/slices");
        REQUIRE(sl);
        CHECK(sl->body == render_slices(block_stack()));

        // Outside the layer contour.
        const json outside = post(c, "/api/design/layers/3/events",
                                  {{"version", version}, {"channel", 1}, {"position", {10, 10}}, {"duration_ms", 20}}, 422);
        CHECK(outside.at("error") == "placement");
        CHECK(outside.at("layer") == 3);
        CHECK(outside.at("diagnostics")[0].at("code") == "outside-layer");

        json ev = post(c, "/api/design/layers/3/events",
                       {{"version", version}, {"channel", 1}, {"position", {50, 55}}, {"intensity", 4}}, 201);
        CHECK(ev.at("design").at("version") == version + 1);

        // Same version again is stale.
        const json stale = post(c, "/api/design/layers/4/events",
                                {{"version", version}, {"channel", 1}, {"position", {50, 55}}, {"duration_ms", 20}}, 409);
        CHECK(stale.at("current_version") == version + 1);
        version += 1;

        json pat = post(c, "/api/design/pattern",
                        {{"version", version}, {"layer", 7}, {"channel", 0}, {"duration_ms", 30}, {"overlap", 0.1}}, 200);
        version = pat.at("design").at("version").get<long>();

        const json preview = post(c, "/api/design/allocate", {{"channel", 2}, {"total_mg", 20.0}, {"preview", true}}, 200);
        CHECK(preview.at("committed") == false);
        auto cur = c.Get("/api/design");
        CHECK(json::parse(cur->body).at("version") == version);
        const json alloc =
            post(c, "/api/design/allocate", {{"version", version}, {"channel", 2}, {"total_mg", 400.0}}, 200);
        CHECK(alloc.at("committed") == true);
        CHECK(alloc.at("report").at("achieved_mg").get<double>() == doctest::Approx(400.0).epsilon(0.05));
        CHECK(alloc.at("report").at("clamped") == false);
        version = alloc.at("design").at("version").get<long>();

        // PUT needs the version and rejects stale ones.
        json doc = json::parse(c.Get("/api/design")->body);
        doc.erase("version");
        auto put = c.Put("/api/design", doc.dump(), "application/json");
        CHECK(put->status == 400);
        doc["version"] = version - 1;
        put = c.Put("/api/design", doc.dump(), "application/json");
        CHECK(put->status == 409);
        doc["version"] = version;
        put = c.Put("/api/design", doc.dump(), "application/json");
        CHECK(put->status == 200);
        version += 1;

        const json pred = post(c, "/api/predict", {{"duration_ms", 20}, {"standoff_mm", 20}}, 200);
        CHECK(pred.at("diameter_mm").get<double>() == doctest::Approx(7.065).epsilon(1e-3));
        CHECK(pred.at("mass_mg").get<double>() == doctest::Approx(1.434).epsilon(1e-3));
        CHECK(pred.at("extrapolated") == false);

        const json cal = json::parse(c.Get("/api/calibration")->body);
        CHECK(cal == to_json(default_calibration()));

        const json g = post(c, "/api/gcode", json::object(), 201);
        auto file = c.Get("/api/gcode/file");
        REQUIRE(file);
        CHECK(file->get_header_value("Content-Type") == "text/x-gcode");
        CHECK(file->body.size() == g.at("bytes").get<std::size_t>());
        CHECK(content_hash(file->body) == g.at("hash"));
        gcode_text = file->body;
        // Same bytes the command-line path produces.
        const TasteDesign design = design_from_json(json::parse(c.Get("/api/design")->body));
        CHECK(gcode_text == build_gcode(block_stack(), design, default_profile(), default_calibration(), {}));

        const json sim = post(c, "/api/simulate", {{"spread_factor", 0.0}}, 200);
        CHECK(sim.at("all_clear") == true);
        CHECK(json::parse(c.Get("/api/simulation")->body) == sim);
        auto layer = c.Get("/api/simulation/layers/3");
        REQUIRE(layer);
        REQUIRE(layer->status == 200);
        const json lj = json::parse(layer->body);
        CHECK(lj.at("channels")[1].at("integrated_mg").get<double>() > 0.0);
        CHECK(c.Get("/api/simulation/layers/99")->status == 404);

        auto bad = c.Post("/api/predict", "{nope", "application/json");
        CHECK(bad->status == 400);
    }
    // A fresh store over the same directory sees the same project.
    ProjectStore again(dir.path());
    const auto st = again.snapshot();
    REQUIRE(st->design);
    CHECK(st->design->version == version);
    CHECK(st->program == gcode_text);
    REQUIRE(st->simulation);
    CHECK(st->simulation->at("all_clear") == true);
}

TEST_CASE("new mesh bumps the design version and drops stale outputs") {
    TempDir dir("srv");
    ProjectStore store(dir.path());
    auto first = store.load_mesh(cube_stl(), MeshFormat::StlBinary, 1.6);
    const long v1 = first->design->version;
    store.generate({});
    auto second = store.load_mesh(cube_stl(12.0), MeshFormat::StlBinary, 1.6);
    CHECK(second->design->version == v1 + 1);
    CHECK_FALSE(second->program.has_value());
    CHECK_FALSE(std::filesystem::exists(dir / "program.gcode"));
    CHECK_THROWS_AS(store.edit_design(v1, [](const TasteDesign& d, const ProjectState&) { return d; }),
                    VersionConflictError);
}

TEST_CASE("a busy port is reported") {
    TempDir dir("srv");
    Running srv(dir.path());
    ProjectStore other(dir / "other");
    Server second(other);
    CHECK_THROWS_AS(second.bind("127.0.0.1", srv.port), IoError);
}
