#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tasteprint/diagnostics.hpp"
#include "tasteprint/geometry.hpp"

namespace tasteprint {

/// Single 8-bit plane, row-major, row 0 first.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(std::size_t(w) * h, fill) {}
    std::uint8_t& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
    bool operator==(const GrayImage&) const = default;
};

enum class Channel { Red = 0, Green = 1, Blue = 2 };

/// Three 8-bit planes sharing one size.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::array<GrayImage, 3> planes;

    RasterImage() = default;
    RasterImage(int w, int h, std::uint8_t fill = 0);
    /// Grayscale source replicated into all three planes.
    static RasterImage from_gray(const GrayImage& g);

    const GrayImage& plane(Channel c) const { return planes[static_cast<int>(c)]; }
    GrayImage& plane(Channel c) { return planes[static_cast<int>(c)]; }
    bool operator==(const RasterImage&) const = default;
};

/// Reads binary P6 (colour) or P5 (gray, replicated) with maxval 255.
RasterImage parse_pnm(std::span<const std::uint8_t> bytes);
RasterImage read_pnm(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const RasterImage& img);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Projective map of the plane. Maps image pixels to millimetres when
/// produced by estimate_homography.
class Homography {
public:
    Homography();  // identity
    explicit Homography(const std::array<double, 9>& row_major);

    static Homography scale(double sx, double sy);

    double operator()(int row, int col) const { return m_[std::size_t(row) * 3 + col]; }
    const std::array<double, 9>& coefficients() const { return m_; }

    Vec2 apply(const Vec2& p) const;
    /// Throws SingularSystemError if not invertible.
    Homography inverse() const;
    Homography operator*(const Homography& rhs) const;

private:
    std::array<double, 9> m_;
};

struct MarkerCorrespondence {
    Vec2 pixel;
    Vec2 world;  // mm on the target plane
};

/// Normalised DLT, scaled so H(2,2) = 1. Needs at least four correspondences
/// with no three world (or pixel) points collinear.
Homography estimate_homography(std::span<const MarkerCorrespondence> corr);

struct MmRect {
    Vec2 min;
    Vec2 size;
};

/// Resamples `image` onto a metric grid covering `region` at `px_per_mm`.
/// Each output pixel centre is mapped back through the inverse of
/// `pixel_to_mm` and sampled bilinearly; samples falling off the source are
/// black and cleared in `valid` when provided.
RasterImage rectify(const RasterImage& image, const Homography& pixel_to_mm, const MmRect& region, double px_per_mm,
                    GrayImage* valid = nullptr);

/// Otsu's threshold: pixels <= t form the lower class. Ties go to the lowest
/// t. A constant plane returns its value with a "no-contrast" warning.
int otsu_threshold(const GrayImage& plane, Diagnostics* diag = nullptr);
/// Same, from a 256-bin histogram.
int otsu_threshold(std::span<const std::uint64_t, 256> histogram, Diagnostics* diag = nullptr);

struct SpotOptions {
    double roi_size_mm = 24.0;
    double px_per_mm = 10.0;
    Channel channel = Channel::Red;
    bool foreground_darker = true;
};

struct SpotMeasurement {
    double equivalent_diameter_mm = 0.0;
    double area_mm2 = 0.0;
    Vec2 centroid;
    int threshold = 0;
    std::size_t pixel_count = 0;
};

/// Rectifies the ROI, segments it by Otsu on the chosen channel and measures
/// the largest 8-connected foreground component.
SpotMeasurement measure_spot(const RasterImage& image, std::span<const MarkerCorrespondence> corr,
                             const Vec2& roi_center, const SpotOptions& options = {}, Diagnostics* diag = nullptr);

/// Same measurement on an image already on the metric grid; `valid` may be null.
SpotMeasurement measure_rectified(const RasterImage& rectified, const GrayImage* valid, const MmRect& region,
                                  const SpotOptions& options, Diagnostics* diag = nullptr);

std::vector<MarkerCorrespondence> markers_from_json(const nlohmann::json& j);
nlohmann::json to_json(std::span<const MarkerCorrespondence> corr);

}  // namespace tasteprint
