#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "tasteprint/errors.hpp"
#include "tasteprint/gcode.hpp"

namespace tasteprint {

namespace {

double quantize(double v, double scale) { return std::round(v * scale) / scale; }
double q3(double v) { return quantize(v, 1e3); }
double q6(double v) { return quantize(v, 1e6); }

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

class Emitter {
public:
    explicit Emitter(const MachineProfile& p) : profile_(p) {}

    void comment(std::string text) { out_.commands.emplace_back(gcode::Comment{std::move(text)}); }
    void setting(std::string code) { out_.commands.emplace_back(gcode::Setting{std::move(code)}); }
    void home() { out_.commands.emplace_back(gcode::Home{}); }

    void travel(std::optional<double> x, std::optional<double> y, std::optional<double> z) {
        gcode::Move m;
        m.rapid = true;
        if (x) m.x = q3(*x);
        if (y) m.y = q3(*y);
        if (z) m.z = q3(*z);
        m.f = feed(profile_.travel_feedrate);
        out_.commands.emplace_back(m);
    }

    void extrude_to(const Vec2& p, double e_abs) {
        gcode::Move m;
        m.x = q3(p.x);
        m.y = q3(p.y);
        m.e = q6(e_abs);
        m.f = feed(profile_.print_feedrate);
        out_.commands.emplace_back(m);
    }

    void spray(int channel, int ms) {
        out_.commands.emplace_back(gcode::Spray{channel, ms});
        out_.commands.emplace_back(gcode::Dwell{ms});
    }

    GcodeProgram take() { return std::move(out_); }

private:
    std::optional<double> feed(double f) {
        const double rounded = std::round(f);
        if (modal_f_ && *modal_f_ == rounded) return std::nullopt;
        modal_f_ = rounded;
        return rounded;
    }

    const MachineProfile& profile_;
    GcodeProgram out_;
    std::optional<double> modal_f_;
};

}  // namespace

std::vector<ExtrusionPath> plan_paths(std::span<const LayerSlice> slices, double infill_density, double infill_spacing) {
    std::vector<ExtrusionPath> paths;
    paths.reserve(slices.size());
    for (const auto& s : slices) paths.push_back(generate_extrusion_paths(s, infill_density, infill_spacing));
    return paths;
}

double expected_total_e(std::span<const LayerSlice> slices, std::span<const ExtrusionPath> paths,
                        const MachineProfile& profile) {
    double e = 0.0;
    for (std::size_t k = 0; k < paths.size() && k < slices.size(); ++k)
        e += paths[k].total_length * slices[k].thickness() * profile.nozzle_diameter_mm * profile.flow_multiplier;
    return e;
}

GcodeProgram generate_gcode(std::span<const LayerSlice> slices, std::span<const ExtrusionPath> paths,
                            const TasteDesign& design, const MachineProfile& profile, const CalibrationSet& cal) {
    profile.validate();
    if (paths.size() != slices.size() || design.layers.size() != slices.size())
        throw ValidationError("slices, paths and design disagree on the layer count");
    const DesignReport report = validate_design(design, slices, cal);
    if (!report.ok()) throw ValidationError("design has errors:\n" + report.diagnostics.to_text());

    Emitter em(profile);
    em.comment(std::string("TASTEPRINT version=") + TASTEPRINT_VERSION + " dialect=M810");
    em.comment("CALIBRATION:" + design.calibration_ref);
    em.comment("DESIGN:" + design_hash(design));
    em.comment("MESH:" + design.mesh_ref);
    em.setting("G21");
    em.setting("G90");
    em.setting("M82");
    em.home();

    double e = 0.0;
    double top_max = profile.build_min.z;
    for (std::size_t k = 0; k < slices.size(); ++k) {
        const LayerSlice& s = slices[k];
        const double top = q3(s.z_top);
        top_max = std::max(top_max, top);
        const double e_per_mm = s.thickness() * profile.nozzle_diameter_mm * profile.flow_multiplier;
        em.comment("LAYER:" + std::to_string(k));
        em.travel(std::nullopt, std::nullopt, top);
        for (const auto& seg : paths[k].segments) {
            if (seg.size() < 2) continue;
            em.travel(seg.front().x, seg.front().y, top);
            for (std::size_t i = 1; i < seg.size(); ++i) {
                e += distance(seg[i - 1], seg[i]) * e_per_mm;
                em.extrude_to(seg[i], e);
            }
        }
        for (const auto& ev : design.layers[k].events) {
            if (ev.channel < 0 || static_cast<std::size_t>(ev.channel) >= profile.channel_count())
                throw ValidationError("channel " + std::to_string(ev.channel) + " has no airbrush in the profile");
            const double z = q3(top + ev.standoff_mm);
            if (z > profile.build_max.z)
                throw OutOfRangeError("layer " + std::to_string(k) + ": spray height " + fixed(z, 3) +
                                      " mm exceeds the machine Z range");
            const Vec2 head = ev.position - profile.airbrush_offsets[static_cast<std::size_t>(ev.channel)];
            if (!profile.in_build_volume({head.x, head.y, z}, 5e-4))
                throw OutOfRangeError("layer " + std::to_string(k) + ": channel " + std::to_string(ev.channel) +
                                      " head position leaves the build volume");
            em.travel(head.x, head.y, z);
            em.spray(ev.channel, ev.duration_ms);
        }
    }
    em.comment("FOOTER");
    em.travel(std::nullopt, std::nullopt, std::min(profile.build_max.z, top_max + 10.0));
    em.setting("M84");
    em.comment("END");
    return em.take();
}

std::string render_command(const GcodeCommand& cmd) {
    return std::visit(
        [](const auto& c) -> std::string {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, gcode::Move>) {
                std::string s = c.rapid ? "G0" : "G1";
                if (c.x) s += " X" + fixed(*c.x, 3);
                if (c.y) s += " Y" + fixed(*c.y, 3);
                if (c.z) s += " Z" + fixed(*c.z, 3);
                if (c.e) s += " E" + fixed(*c.e, 6);
                if (c.f) s += " F" + fixed(*c.f, 0);
                return s;
            } else if constexpr (std::is_same_v<T, gcode::Dwell>) {
                return "G4 P" + std::to_string(c.ms);
            } else if constexpr (std::is_same_v<T, gcode::Spray>) {
                return "M810 C" + std::to_string(c.channel) + " D" + std::to_string(c.duration_ms);
            } else if constexpr (std::is_same_v<T, gcode::Home>) {
                return "G28";
            } else if constexpr (std::is_same_v<T, gcode::Setting>) {
                return c.code;
            } else if constexpr (std::is_same_v<T, gcode::Comment>) {
                return ";" + c.text;
            } else {
                return c.text;
            }
        },
        cmd);
}

std::string render_gcode(const GcodeProgram& program) {
    std::string out;
    for (const auto& c : program.commands) {
        out += render_command(c);
        out += '\n';
    }
    return out;
}

namespace {

std::optional<long> layer_marker(const GcodeCommand& cmd) {
    const auto* c = std::get_if<gcode::Comment>(&cmd);
    if (!c || c->text.rfind("LAYER:", 0) != 0) return std::nullopt;
    long k = 0;
    const char* first = c->text.data() + 6;
    const char* last = c->text.data() + c->text.size();
    const auto res = std::from_chars(first, last, k);
    if (res.ec != std::errc{} || res.ptr != last) return std::nullopt;
    return k;
}

bool is_end_marker(const GcodeCommand& cmd) {
    const auto* c = std::get_if<gcode::Comment>(&cmd);
    return c && (c->text == "END" || c->text == "FOOTER");
}

}  // namespace

std::vector<LayerBlock> layer_blocks(const GcodeProgram& program) {
    std::vector<LayerBlock> blocks;
    double e = 0.0, z = 0.0;
    bool have_extruding_top = false;
    for (std::size_t i = 0; i < program.commands.size(); ++i) {
        const auto& cmd = program.commands[i];
        if (auto k = layer_marker(cmd)) {
            if (!blocks.empty() && blocks.back().end == 0) blocks.back().end = i;
            blocks.push_back(LayerBlock{*k, i, 0, std::nullopt});
            have_extruding_top = false;
            continue;
        }
        if (is_end_marker(cmd) && !blocks.empty() && blocks.back().end == 0) blocks.back().end = i;
        const auto* m = std::get_if<gcode::Move>(&cmd);
        if (!m) continue;
        const bool open = !blocks.empty() && blocks.back().end == 0;
        const bool extruding = is_extruding(*m, e);
        if (m->z) z = *m->z;
        if (m->e) e = *m->e;
        if (!open) continue;
        auto& b = blocks.back();
        if (extruding && !have_extruding_top) {
            b.layer_top = z;
            have_extruding_top = true;
        } else if (m->z && !b.layer_top) {
            b.layer_top = z;
        }
    }
    if (!blocks.empty() && blocks.back().end == 0) blocks.back().end = program.commands.size();
    return blocks;
}

Diagnostics validate_program(const GcodeProgram& program, const MachineProfile& profile) {
    Diagnostics d;
    const auto blocks = layer_blocks(program);
    if (blocks.empty()) d.error("no-layers", "program has no ;LAYER: markers");
    for (const auto& b : blocks) {
        double e = -std::numeric_limits<double>::infinity();
        for (std::size_t i = b.begin; i < b.end; ++i) {
            const auto& cmd = program.commands[i];
            const std::string at = "line " + std::to_string(program.line_of(i)) + ": ";
            if (const auto* s = std::get_if<gcode::Spray>(&cmd)) {
                if (s->channel < 0 || s->channel >= kMaxChannels ||
                    static_cast<std::size_t>(s->channel) >= profile.channel_count())
                    d.error("channel-range", at + "spray channel " + std::to_string(s->channel) + " out of range",
                            static_cast<std::size_t>(b.layer));
                if (s->duration_ms < 1)
                    d.error("duration", at + "spray duration must be at least 1 ms", static_cast<std::size_t>(b.layer));
            } else if (const auto* m = std::get_if<gcode::Move>(&cmd)) {
                for (const auto& v : {m->x, m->y, m->z, m->e, m->f})
                    if (v && !std::isfinite(*v)) d.error("non-finite", at + "non-finite coordinate");
                if (m->e) {
                    if (*m->e < e) d.error("e-regression", at + "E decreases inside a layer block",
                                           static_cast<std::size_t>(b.layer));
                    e = *m->e;
                }
            }
        }
    }
    return d;
}

std::vector<std::vector<SprayEvent>> extract_spray_plan(const GcodeProgram& program, const MachineProfile& profile) {
    const auto blocks = layer_blocks(program);
    if (blocks.empty()) throw ValidationError("program has no ;LAYER: markers");
    long max_layer = -1;
    for (const auto& b : blocks) max_layer = std::max(max_layer, b.layer);
    std::vector<std::vector<SprayEvent>> plan(static_cast<std::size_t>(max_layer + 1));

    double x = 0.0, y = 0.0, z = 0.0, e = 0.0;
    std::size_t next_block = 0;
    const LayerBlock* block = nullptr;
    bool positioned = false;
    for (std::size_t i = 0; i < program.commands.size(); ++i) {
        if (next_block < blocks.size() && blocks[next_block].begin == i) {
            block = &blocks[next_block++];
            positioned = false;
        }
        if (block && i >= block->end) block = nullptr;
        const auto& cmd = program.commands[i];
        if (const auto* m = std::get_if<gcode::Move>(&cmd)) {
            const bool extruding = is_extruding(*m, e);
            if (m->x) x = *m->x;
            if (m->y) y = *m->y;
            if (m->z) z = *m->z;
            if (m->e) e = *m->e;
            if (extruding)
                positioned = false;
            else if (m->x || m->y)
                positioned = true;
        } else if (const auto* s = std::get_if<gcode::Spray>(&cmd)) {
            const std::size_t line = program.line_of(i);
            if (!block) throw OrphanSprayError("spray outside any layer block", line);
            if (!positioned)
                throw OrphanSprayError("line " + std::to_string(line) + ": spray without a positioning move", line);
            if (s->channel < 0 || static_cast<std::size_t>(s->channel) >= profile.channel_count())
                throw ValidationError("line " + std::to_string(line) + ": channel " + std::to_string(s->channel) +
                                      " has no airbrush in the profile");
            SprayEvent ev;
            ev.channel = s->channel;
            ev.position = quantize_mm(Vec2{x, y} + profile.airbrush_offsets[static_cast<std::size_t>(s->channel)]);
            ev.duration_ms = s->duration_ms;
            ev.standoff_mm = quantize_mm(z - block->layer_top.value_or(z));
            plan[static_cast<std::size_t>(block->layer)].push_back(ev);
            positioned = false;
        }
    }
    return plan;
}

}  // namespace tasteprint
