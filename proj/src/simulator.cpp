#include "tasteprint/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "tasteprint/errors.hpp"

namespace tasteprint {

double DepositionMap::integrated_mass(int channel) const {
    double sum = 0.0;
    const std::size_t n = std::size_t(nx) * ny;
    const double* p = density.data() + std::size_t(channel) * n;
    for (std::size_t i = 0; i < n; ++i) sum += p[i];
    return sum * cell_size * cell_size;
}

namespace {

std::string line_tag(const GcodeProgram& p, std::size_t i) { return "line " + std::to_string(p.line_of(i)) + ": "; }

void deposit(DepositionMap& map, SprayRecord& rec, int subsamples) {
    const double r = 0.5 * rec.diameter_mm;
    const double cell = map.cell_size;
    const int ss = subsamples;
    const double step = cell / ss;
    const int i0 = std::max(0, static_cast<int>(std::floor((rec.position.x - r - map.origin.x) / cell)));
    const int i1 = std::min(map.nx - 1, static_cast<int>(std::floor((rec.position.x + r - map.origin.x) / cell)));
    const int j0 = std::max(0, static_cast<int>(std::floor((rec.position.y - r - map.origin.y) / cell)));
    const int j1 = std::min(map.ny - 1, static_cast<int>(std::floor((rec.position.y + r - map.origin.y) / cell)));

    struct Hit {
        int i, j, count;
    };
    std::vector<Hit> hits;
    long total = 0;
    double cx = 0.0, cy = 0.0;
    for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
            int count = 0;
            for (int b = 0; b < ss; ++b) {
                const double y = map.origin.y + j * cell + (b + 0.5) * step;
                for (int a = 0; a < ss; ++a) {
                    const double x = map.origin.x + i * cell + (a + 0.5) * step;
                    const double dx = x - rec.position.x, dy = y - rec.position.y;
                    if (dx * dx + dy * dy <= r * r) {
                        ++count;
                        cx += x;
                        cy += y;
                    }
                }
            }
            if (count > 0) hits.push_back({i, j, count});
            total += count;
        }
    }
    if (total == 0) {
        // Footprint smaller than one subsample: the whole dose lands in the centre cell.
        const int i = std::clamp(static_cast<int>(std::floor((rec.position.x - map.origin.x) / cell)), 0, map.nx - 1);
        const int j = std::clamp(static_cast<int>(std::floor((rec.position.y - map.origin.y) / cell)), 0, map.ny - 1);
        hits.push_back({i, j, ss * ss});
        total = ss * ss;
        cx = rec.position.x * total;
        cy = rec.position.y * total;
    }
    const double sub_area = step * step;
    rec.covered_area_mm2 = static_cast<double>(total) * sub_area;
    rec.raster_centroid = {cx / static_cast<double>(total), cy / static_cast<double>(total)};
    for (const auto& h : hits)
        map.at(rec.channel, h.i, h.j) += rec.mass_mg * (h.count * sub_area) / (rec.covered_area_mm2 * cell * cell);
}

}  // namespace

SimulationResult simulate(const GcodeProgram& program, const CalibrationSet& cal, const MachineProfile& profile,
                          const SimulationOptions& opt) {
    profile.validate();
    if (!(opt.cell_size > 0.0)) throw DomainError("cell size must be positive");
    if (!(opt.spread_factor > -1.0)) throw DomainError("spread factor must exceed -1");
    if (opt.subsamples < 1) throw DomainError("subsamples must be positive");

    SimulationResult res;
    VirtualPrinterState& st = res.state;
    st.position = profile.build_min;
    st.feedrate = profile.travel_feedrate;

    const auto blocks = layer_blocks(program);
    Box2 extent;
    std::size_t next_block = 0;
    const LayerBlock* block = nullptr;

    for (std::size_t i = 0; i < program.commands.size(); ++i) {
        if (next_block < blocks.size() && blocks[next_block].begin == i) {
            block = &blocks[next_block++];
            st.current_layer = block->layer;
        }
        if (block && i >= block->end) block = nullptr;
        const auto& cmd = program.commands[i];

        if (const auto* m = std::get_if<gcode::Move>(&cmd)) {
            Vec3 target = st.position;
            if (m->x) target.x = *m->x;
            if (m->y) target.y = *m->y;
            if (m->z) target.z = *m->z;
            if (m->f) st.feedrate = *m->f;
            if (!profile.in_build_volume(target))
                throw BoundsError(line_tag(program, i) + "move leaves the build volume");
            if (!(st.feedrate > 0.0)) throw DomainError(line_tag(program, i) + "feedrate must be positive");
            const double dist = norm(target - st.position);
            st.elapsed_s += dist / (st.feedrate / 60.0);
            if (is_extruding(*m, st.e_axis)) {
                extent.include({st.position.x, st.position.y});
                extent.include({target.x, target.y});
            }
            if (m->e) st.e_axis = *m->e;
            st.position = target;
        } else if (const auto* d = std::get_if<gcode::Dwell>(&cmd)) {
            st.elapsed_s += d->ms / 1000.0;
        } else if (std::holds_alternative<gcode::Home>(cmd)) {
            st.position = profile.build_min;
        } else if (const auto* s = std::get_if<gcode::Spray>(&cmd)) {
            if (!block) throw SynchronizationError(line_tag(program, i) + "spray outside any layer block");
            if (s->channel < 0 || static_cast<std::size_t>(s->channel) >= profile.channel_count())
                throw ValidationError(line_tag(program, i) + "channel " + std::to_string(s->channel) +
                                      " has no airbrush in the profile");
            const double top = block->layer_top.value_or(st.position.z);
            const double standoff = st.position.z - top;
            if (!(standoff > 0.0))
                throw SynchronizationError(line_tag(program, i) + "layer " + std::to_string(block->layer) +
                                           ": spray at Z " + format_number(st.position.z) +
                                           " is not above the layer top " + format_number(top));
            SprayRecord rec;
            rec.layer = static_cast<std::size_t>(block->layer);
            rec.channel = s->channel;
            rec.position = Vec2{st.position.x, st.position.y} + profile.airbrush_offsets[std::size_t(s->channel)];
            rec.standoff_mm = standoff;
            rec.duration_ms = s->duration_ms;
            Diagnostics local;
            rec.diameter_mm = predict_diameter(cal, standoff, s->duration_ms, &local) * (1.0 + opt.spread_factor);
            rec.mass_mg = predict_mass(cal, s->duration_ms, &local);
            for (const auto& item : local.items())
                res.diagnostics.add(item.severity, item.code, line_tag(program, i) + item.message, rec.layer);
            rec.line = program.line_of(i);
            const double r = 0.5 * rec.diameter_mm;
            extent.include(rec.position - Vec2{r, r});
            extent.include(rec.position + Vec2{r, r});
            st.spray_log.push_back(rec);
        }
    }

    // One grid, shared by all layers, covering every extrusion and footprint.
    const double cell = opt.cell_size;
    if (!extent.valid) extent.include({profile.build_min.x, profile.build_min.y});
    const Vec2 origin{std::floor(extent.min.x / cell) * cell - cell, std::floor(extent.min.y / cell) * cell - cell};
    const int nx = static_cast<int>(std::ceil((extent.max.x - origin.x) / cell)) + 1;
    const int ny = static_cast<int>(std::ceil((extent.max.y - origin.y) / cell)) + 1;
    const int channels = static_cast<int>(profile.channel_count());

    std::map<long, std::size_t> map_of_layer;
    for (const auto& b : blocks) {
        if (map_of_layer.count(b.layer)) continue;
        map_of_layer[b.layer] = res.maps.size();
        DepositionMap m;
        m.layer_index = static_cast<std::size_t>(b.layer);
        m.cell_size = cell;
        m.origin = origin;
        m.nx = nx;
        m.ny = ny;
        m.channels = channels;
        m.density.assign(std::size_t(channels) * nx * ny, 0.0);
        res.maps.push_back(std::move(m));
    }
    for (auto& rec : st.spray_log) deposit(res.maps[map_of_layer.at(static_cast<long>(rec.layer))], rec, opt.subsamples);
    return res;
}

Diagnostics check_synchronization(const GcodeProgram& program) {
    Diagnostics d;
    const auto blocks = layer_blocks(program);
    double e = 0.0, z = 0.0;
    std::size_t next_block = 0;
    const LayerBlock* block = nullptr;
    std::optional<double> previous_top;

    struct BlockState {
        std::optional<std::size_t> last_extrusion;
        std::optional<std::size_t> first_spray;
        std::optional<double> extrusion_z;
        bool z_varies = false;
        bool positioned = false;
    } bs;

    auto close_block = [&]() {
        if (!block) return;
        const auto k = static_cast<std::size_t>(block->layer);
        if (bs.first_spray && bs.last_extrusion && *bs.first_spray < *bs.last_extrusion)
            d.error("order", "layer " + std::to_string(k) + ": spray before the end of extrusion", k);
        if (bs.z_varies) d.error("z-during-extrusion", "layer " + std::to_string(k) + ": Z changes during extrusion", k);
        block = nullptr;
    };

    for (std::size_t i = 0; i < program.commands.size(); ++i) {
        if (block && i >= block->end) close_block();
        if (next_block < blocks.size() && blocks[next_block].begin == i) {
            close_block();
            block = &blocks[next_block++];
            bs = BlockState{};
            if (block->layer_top) {
                if (previous_top && *block->layer_top < *previous_top - 1e-9)
                    d.error("z-regression",
                            "layer " + std::to_string(block->layer) + ": layer top " + format_number(*block->layer_top) +
                                " below previous " + format_number(*previous_top),
                            static_cast<std::size_t>(block->layer));
                previous_top = block->layer_top;
            }
        }
        const auto& cmd = program.commands[i];
        if (const auto* m = std::get_if<gcode::Move>(&cmd)) {
            const bool extruding = is_extruding(*m, e);
            if (m->z) z = *m->z;
            if (m->e) e = *m->e;
            if (!block) continue;
            if (extruding) {
                bs.last_extrusion = i;
                if (bs.extrusion_z && std::abs(*bs.extrusion_z - z) > 1e-9) bs.z_varies = true;
                if (!bs.extrusion_z) bs.extrusion_z = z;
                bs.positioned = false;
            } else if (m->x || m->y) {
                bs.positioned = true;
            }
        } else if (std::holds_alternative<gcode::Spray>(cmd)) {
            const std::string at = "line " + std::to_string(program.line_of(i));
            if (!block) {
                d.error("unblocked-spray", at + ": spray outside any layer block");
                continue;
            }
            const auto k = static_cast<std::size_t>(block->layer);
            if (!bs.first_spray) bs.first_spray = i;
            if (!bs.positioned) {
                d.error("orphan-spray", at + ": layer " + std::to_string(k) + ": spray without a positioning move", k);
            } else {
                const double top = block->layer_top.value_or(z);
                if (!(z - top > 0.0))
                    d.error("standoff", at + ": layer " + std::to_string(k) + ": spray Z " + format_number(z) +
                                            " is not above the layer top " + format_number(top),
                            k);
            }
            bs.positioned = false;
        }
    }
    close_block();
    return d;
}

bool ComparisonReport::all_clear() const {
    if (!structural.empty()) return false;
    for (const auto& m : masses)
        if (m.flagged) return false;
    for (const auto& c : centroids)
        if (c.flagged) return false;
    return true;
}

ComparisonReport compare_to_design(const SimulationResult& sim, const TasteDesign& design, const CalibrationSet& cal) {
    ComparisonReport rep;
    if (sim.maps.size() != design.layers.size())
        rep.structural.push_back("design has " + std::to_string(design.layers.size()) + " layers, simulation " +
                                 std::to_string(sim.maps.size()));
    std::map<std::size_t, const DepositionMap*> by_layer;
    for (const auto& m : sim.maps) by_layer[m.layer_index] = &m;
    std::map<std::size_t, std::vector<const SprayRecord*>> records;
    for (const auto& r : sim.state.spray_log) records[r.layer].push_back(&r);

    for (std::size_t k = 0; k < design.layers.size(); ++k) {
        const auto it = by_layer.find(k);
        if (it == by_layer.end()) continue;
        const DepositionMap& map = *it->second;
        const auto& events = design.layers[k].events;
        for (const auto& ch : design.channels) {
            if (ch.index < 0 || ch.index >= map.channels) continue;
            MassComparison mc;
            mc.layer = k;
            mc.channel = ch.index;
            for (const auto& e : events)
                if (e.channel == ch.index) mc.designed_mg += predict_mass(cal, e.duration_ms);
            mc.simulated_mg = map.integrated_mass(ch.index);
            const double diff = std::abs(mc.simulated_mg - mc.designed_mg);
            mc.relative_deviation = mc.designed_mg > 0.0 ? diff / mc.designed_mg : diff;
            mc.flagged = mc.relative_deviation > 1e-6;
            rep.masses.push_back(mc);
        }
        const auto& recs = records[k];
        if (recs.size() != events.size())
            rep.structural.push_back("layer " + std::to_string(k) + ": " + std::to_string(events.size()) +
                                     " designed events, " + std::to_string(recs.size()) + " simulated sprays");
        for (std::size_t i = 0; i < std::min(recs.size(), events.size()); ++i) {
            CentroidComparison cc;
            cc.layer = k;
            cc.event = i;
            cc.designed = events[i].position;
            cc.simulated = recs[i]->raster_centroid;
            cc.deviation_mm = distance(cc.designed, cc.simulated);
            cc.flagged = cc.deviation_mm > map.cell_size || recs[i]->channel != events[i].channel;
            rep.centroids.push_back(cc);
        }
    }
    return rep;
}

std::vector<ConservationRow> conservation_report(const SimulationResult& sim) {
    std::vector<ConservationRow> rows;
    for (const auto& m : sim.maps) {
        for (int c = 0; c < m.channels; ++c) {
            ConservationRow row;
            row.layer = m.layer_index;
            row.channel = c;
            for (const auto& r : sim.state.spray_log)
                if (r.layer == m.layer_index && r.channel == c) row.expected_mg += r.mass_mg;
            row.integrated_mg = m.integrated_mass(c);
            const double diff = std::abs(row.integrated_mg - row.expected_mg);
            row.relative_error = row.expected_mg > 0.0 ? diff / row.expected_mg : diff;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace tasteprint
