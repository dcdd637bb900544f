#include <cctype>
#include <fstream>

#include "tasteprint/errors.hpp"
#include "tasteprint/imaging.hpp"
#include "tasteprint/mesh.hpp"

namespace tasteprint {

RasterImage::RasterImage(int w, int h, std::uint8_t fill) : width(w), height(h) {
    for (auto& p : planes) p = GrayImage(w, h, fill);
}

RasterImage RasterImage::from_gray(const GrayImage& g) {
    RasterImage img;
    img.width = g.width;
    img.height = g.height;
    for (auto& p : img.planes) p = g;
    return img;
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> b) : bytes_(b) {}

    long next_int() {
        skip_space_and_comments();
        const std::size_t start = pos_;
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000) throw ParseError("PNM header value too large", start, ParseError::Unit::Byte);
            ++pos_;
        }
        if (pos_ == start) throw ParseError("expected integer in PNM header", start, ParseError::Unit::Byte);
        return v;
    }
    // Exactly one whitespace byte separates the header from the raster.
    std::size_t raster_start() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw ParseError("expected whitespace after PNM header", pos_, ParseError::Unit::Byte);
        return pos_ + 1;
    }
    std::size_t pos() const { return pos_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

RasterImage parse_pnm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw ParseError("not a binary PGM/PPM (P5/P6)", 0, ParseError::Unit::Byte);
    const bool color = bytes[1] == '6';
    HeaderReader hdr(bytes);
    hdr.advance(2);
    const long w = hdr.next_int();
    const long h = hdr.next_int();
    const long maxval = hdr.next_int();
    if (w <= 0 || h <= 0) throw ParseError("PNM image has zero size", hdr.pos(), ParseError::Unit::Byte);
    if (maxval != 255) throw ParseError("only 8-bit PNM (maxval 255) is supported", hdr.pos(), ParseError::Unit::Byte);
    const std::size_t start = hdr.raster_start();
    const std::size_t channels = color ? 3 : 1;
    const std::size_t need = std::size_t(w) * std::size_t(h) * channels;
    if (bytes.size() - start < need) throw ParseError("PNM raster truncated", bytes.size(), ParseError::Unit::Byte);

    RasterImage img(static_cast<int>(w), static_cast<int>(h));
    const std::uint8_t* p = bytes.data() + start;
    for (std::size_t i = 0; i < std::size_t(w) * std::size_t(h); ++i) {
        if (color) {
            img.planes[0].pixels[i] = p[3 * i];
            img.planes[1].pixels[i] = p[3 * i + 1];
            img.planes[2].pixels[i] = p[3 * i + 2];
        } else {
            img.planes[0].pixels[i] = img.planes[1].pixels[i] = img.planes[2].pixels[i] = p[i];
        }
    }
    return img;
}

RasterImage read_pnm(const std::filesystem::path& path) { return parse_pnm(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_ppm(const RasterImage& img) {
    const std::string hdr = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(hdr.begin(), hdr.end());
    const std::size_t n = std::size_t(img.width) * img.height;
    out.reserve(out.size() + 3 * n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& p : img.planes) out.push_back(p.pixels[i]);
    return out;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const std::string hdr = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(hdr.begin(), hdr.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace tasteprint
