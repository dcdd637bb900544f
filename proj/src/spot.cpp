#include <algorithm>
#include <cmath>
#include <numbers>

#include "tasteprint/errors.hpp"
#include "tasteprint/imaging.hpp"

namespace tasteprint {

int otsu_threshold(std::span<const std::uint64_t, 256> hist, Diagnostics* diag) {
    std::uint64_t total = 0, sum = 0;
    int lo = -1, hi = -1;
    for (int v = 0; v < 256; ++v) {
        total += hist[v];
        sum += hist[v] * static_cast<std::uint64_t>(v);
        if (hist[v] > 0) {
            if (lo < 0) lo = v;
            hi = v;
        }
    }
    if (total == 0) throw DomainError("Otsu threshold of an empty plane");
    if (lo == hi) {
        note(diag, Severity::Warning, "no-contrast", "plane is constant at " + std::to_string(lo));
        return lo;
    }

    // Between-class variance up to the constant 1/N^2:
    //   (n1*S0 - n0*S1)^2 / (n0*n1)
    // The numerator is formed exactly in 128-bit integers so equal class
    // splits compare equal and ties resolve to the lowest threshold.
    std::uint64_t n0 = 0, s0 = 0;
    long double best = -1.0L;
    int best_t = lo;
    for (int t = 0; t < 255; ++t) {
        n0 += hist[t];
        s0 += hist[t] * static_cast<std::uint64_t>(t);
        const std::uint64_t n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const std::uint64_t s1 = sum - s0;
        const __int128 diff = static_cast<__int128>(n1) * s0 - static_cast<__int128>(n0) * s1;
        const long double num = static_cast<long double>(diff) * static_cast<long double>(diff);
        const long double var = num / (static_cast<long double>(n0) * static_cast<long double>(n1));
        if (var > best) {
            best = var;
            best_t = t;
        }
    }
    return best_t;
}

int otsu_threshold(const GrayImage& plane, Diagnostics* diag) {
    if (plane.pixels.empty()) throw DomainError("Otsu threshold of an empty plane");
    std::array<std::uint64_t, 256> hist{};
    for (auto v : plane.pixels) ++hist[v];
    return otsu_threshold(std::span<const std::uint64_t, 256>(hist), diag);
}

SpotMeasurement measure_rectified(const RasterImage& img, const GrayImage* valid, const MmRect& region,
                                  const SpotOptions& opt, Diagnostics* diag) {
    const GrayImage& plane = img.plane(opt.channel);
    const int w = img.width, h = img.height;
    auto usable = [&](int x, int y) { return !valid || valid->at(x, y) != 0; };

    std::array<std::uint64_t, 256> hist{};
    std::uint64_t n = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (usable(x, y)) {
                ++hist[plane.at(x, y)];
                ++n;
            }
    if (n == 0) throw EmptySpotError("ROI lies entirely outside the photograph");
    Diagnostics local;
    const int t = otsu_threshold(std::span<const std::uint64_t, 256>(hist), &local);
    if (diag) diag->append(local);
    if (local.count("no-contrast") > 0) throw EmptySpotError("no spot in ROI: the plane has no contrast");

    auto foreground = [&](int x, int y) {
        if (!usable(x, y)) return false;
        const int v = plane.at(x, y);
        return opt.foreground_darker ? v <= t : v > t;
    };

    // 8-connected labelling; keep the largest component (first in raster order on ties).
    std::vector<int> label(std::size_t(w) * h, 0);
    std::vector<std::pair<int, int>> stack;
    std::size_t best_count = 0;
    double best_sx = 0.0, best_sy = 0.0;
    int next = 0;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            if (label[std::size_t(y0) * w + x0] != 0 || !foreground(x0, y0)) continue;
            ++next;
            std::size_t count = 0;
            double sx = 0.0, sy = 0.0;
            stack.assign(1, {x0, y0});
            label[std::size_t(y0) * w + x0] = next;
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                ++count;
                sx += x + 0.5;
                sy += y + 0.5;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        int& l = label[std::size_t(ny) * w + nx];
                        if (l != 0 || !foreground(nx, ny)) continue;
                        l = next;
                        stack.emplace_back(nx, ny);
                    }
            }
            if (count > best_count) {
                best_count = count;
                best_sx = sx;
                best_sy = sy;
            }
        }
    }
    if (best_count == 0) throw EmptySpotError("no foreground pixels in ROI");

    SpotMeasurement m;
    m.threshold = t;
    m.pixel_count = best_count;
    const double px_area = 1.0 / (opt.px_per_mm * opt.px_per_mm);
    m.area_mm2 = static_cast<double>(best_count) * px_area;
    m.equivalent_diameter_mm = 2.0 * std::sqrt(m.area_mm2 / std::numbers::pi);
    m.centroid = {region.min.x + best_sx / static_cast<double>(best_count) / opt.px_per_mm,
                  region.min.y + best_sy / static_cast<double>(best_count) / opt.px_per_mm};
    return m;
}

SpotMeasurement measure_spot(const RasterImage& image, std::span<const MarkerCorrespondence> corr,
                             const Vec2& roi_center, const SpotOptions& opt, Diagnostics* diag) {
    if (!(opt.roi_size_mm > 0.0)) throw DomainError("ROI size must be positive");
    const Homography H = estimate_homography(corr);
    const MmRect region{{roi_center.x - opt.roi_size_mm / 2, roi_center.y - opt.roi_size_mm / 2},
                        {opt.roi_size_mm, opt.roi_size_mm}};
    GrayImage valid;
    const RasterImage rect = rectify(image, H, region, opt.px_per_mm, &valid);
    return measure_rectified(rect, &valid, region, opt, diag);
}

std::vector<MarkerCorrespondence> markers_from_json(const nlohmann::json& j) {
    std::vector<MarkerCorrespondence> out;
    try {
        for (const auto& c : j.at("correspondences"))
            out.push_back({{c.at("px").at(0).get<double>(), c.at("px").at(1).get<double>()},
                           {c.at("mm").at(0).get<double>(), c.at("mm").at(1).get<double>()}});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed marker annotation: ") + e.what());
    }
    return out;
}

nlohmann::json to_json(std::span<const MarkerCorrespondence> corr) {
    auto arr = nlohmann::json::array();
    for (const auto& c : corr) arr.push_back({{"px", {c.pixel.x, c.pixel.y}}, {"mm", {c.world.x, c.world.y}}});
    return {{"correspondences", arr}};
}

}  // namespace tasteprint
