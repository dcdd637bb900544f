#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tasteprint/calibration.hpp"
#include "tasteprint/gcode.hpp"
#include "tasteprint/imaging.hpp"
#include "tasteprint/mesh.hpp"
#include "tasteprint/planner.hpp"
#include "tasteprint/project.hpp"
#include "tasteprint/slicer.hpp"

namespace fixtures {

using namespace tasteprint;

inline constexpr std::uint64_t kSeed = 42;

inline std::vector<std::uint8_t> cube_stl(double size = 10.0) {
    return to_binary_stl(make_box({0, 0, 0}, {size, size, size}));
}

inline SliceStack cube_stack(double size = 10.0, double h = 1.6) { return slice_bytes(cube_stl(size), MeshFormat::StlBinary, h); }

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "tp") {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// ---- calibration designs ---------------------------------------------------

/// 3 distances x 3 durations x 3 replicates from the footprint model plus noise.
inline std::vector<CalibrationSample> resolution_design(const CalibrationSet& truth, double sigma, std::mt19937_64* rng) {
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<CalibrationSample> out;
    for (double d : {20.0, 30.0, 40.0})
        for (double t : {20.0, 40.0, 60.0})
            for (int r = 1; r <= 3; ++r) {
                CalibrationSample s;
                s.distance_mm = d;
                s.duration_ms = t;
                const double clean = truth.beta0 + truth.beta1 * std::sqrt(d) + truth.beta2 * std::sqrt(t);
                s.diameter_mm = clean + (rng ? noise(*rng) : 0.0);
                s.replicate = r;
                out.push_back(s);
            }
    return out;
}

/// 5 durations x 3 replicates at 20 mm from the dose model plus noise.
inline std::vector<CalibrationSample> amount_design(const CalibrationSet& truth, double sigma, std::mt19937_64* rng) {
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<CalibrationSample> out;
    for (double t : {10.0, 20.0, 40.0, 60.0, 80.0})
        for (int r = 1; r <= 3; ++r) {
            CalibrationSample s;
            s.distance_mm = 20.0;
            s.duration_ms = t;
            s.mass_mg = truth.alpha0 + truth.alpha1 * t + (rng ? noise(*rng) : 0.0);
            s.replicate = r;
            out.push_back(s);
        }
    return out;
}

// ---- synthetic photographs ------------------------------------------------

/// Camera looking obliquely at the plane: maps plane mm to photo pixels.
inline Homography oblique_camera() {
    // 10 px/mm plane, shifted, sheared and with a mild perspective term.
    return Homography({10.4, 1.3, 60.0, -0.9, 9.6, 45.0, 0.0009, -0.0006, 1.0});
}

/// Renders a dark disc of `diameter` at `center` (mm) on a light plane as
/// seen through `mm_to_px`, with 4x4 supersampled pixel coverage.
inline RasterImage synth_photo(const Homography& mm_to_px, Vec2 center, double diameter, int width, int height) {
    const Homography px_to_mm = mm_to_px.inverse();
    RasterImage img(width, height);
    const std::array<int, 3> bg{236, 232, 225}, fg{52, 70, 190};
    const double r2 = 0.25 * diameter * diameter;
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) {
            int inside = 0;
            for (int b = 0; b < 4; ++b)
                for (int a = 0; a < 4; ++a) {
                    const Vec2 w = px_to_mm.apply({u + (a + 0.5) / 4.0, v + (b + 0.5) / 4.0});
                    const double dx = w.x - center.x, dy = w.y - center.y;
                    if (dx * dx + dy * dy <= r2) ++inside;
                }
            const double f = inside / 16.0;
            for (int c = 0; c < 3; ++c)
                img.planes[c].at(u, v) = static_cast<std::uint8_t>(std::lround(bg[c] + f * (fg[c] - bg[c])));
        }
    return img;
}

/// Exhaustive threshold search straight from the definition of between-class
/// variance, compared exactly by cross-multiplication.
inline int otsu_oracle(const GrayImage& g) {
    std::array<long long, 256> h{};
    for (auto p : g.pixels) ++h[p];
    long long n = 0, s = 0;
    for (int i = 0; i < 256; ++i) n += h[i], s += i * h[i];
    int best = -1;
    __int128 best_num = -1, best_den = 1;
    for (int t = 0; t < 256; ++t) {
        long long w0 = 0, s0 = 0;
        for (int i = 0; i <= t; ++i) w0 += h[i], s0 += i * h[i];
        const long long w1 = n - w0;
        __int128 num = 0, den = 1;
        if (w0 > 0 && w1 > 0) {
            // sigma_b^2 * n^2 = (n*s0 - w0*s)^2 / (w0*w1)
            const __int128 diff = static_cast<__int128>(n) * s0 - static_cast<__int128>(w0) * s;
            num = diff * diff;
            den = static_cast<__int128>(w0) * w1;
        }
        if (best < 0 || num * best_den > best_num * den) best = t, best_num = num, best_den = den;
    }
    return best;
}

/// Four fiducial corners of a square around the spot, located in the photo.
inline std::vector<MarkerCorrespondence> markers_for(const Homography& mm_to_px, Vec2 center, double half = 20.0) {
    std::vector<MarkerCorrespondence> m;
    for (Vec2 w : {Vec2{center.x - half, center.y - half}, Vec2{center.x + half, center.y - half},
                   Vec2{center.x + half, center.y + half}, Vec2{center.x - half, center.y + half}})
        m.push_back({mm_to_px.apply(w), w});
    return m;
}

// ---- multi-layer design ---------------------------------------------------

/// 30 x 30 x 32 mm block: 20 layers at 1.6 mm.
inline SliceStack block_stack() {
    return slice_bytes(to_binary_stl(make_box({40, 40, 0}, {70, 70, 32})), MeshFormat::StlBinary, 1.6);
}

/// Three channels across 20 layers: free events, a dense pattern and a
/// total-amount allocation.
inline TasteDesign three_channel_design(const SliceStack& stack, const CalibrationSet& cal) {
    TasteDesign d = new_design(stack, cal);
    for (std::size_t k = 0; k < stack.layers.size(); k += 2) {
        SprayEvent e;
        e.channel = 1;
        e.position = {45.0 + 1.25 * static_cast<double>(k), 52.345};
        e.duration_ms = 10 + static_cast<int>(3 * k);
        e.standoff_mm = 20.0 + 0.5 * static_cast<double>(k % 5);
        d = add_free_event(d, k, e, stack.layers, cal);
    }
    d = fill_pattern(d, 7, 0, 30, 25.0, 0.1, stack.layers, cal);
    d = fill_pattern(d, 15, 0, 60, 30.0, 0.0, stack.layers, cal);
    d = allocate_total_amount(d, 3, 40.0, 22.5, stack.layers, cal).design;
    return d;
}

inline MachineProfile offset_profile() {
    MachineProfile p = default_profile();
    p.airbrush_offsets = {{0, 0}, {12.5, -3.25}, {-8.0, 4.0}, {30.125, 0.5}, {0, 0}, {0, 0}};
    return p;
}

}  // namespace fixtures
