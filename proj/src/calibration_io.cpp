#include <charconv>
#include <cmath>
#include <sstream>

#include "tasteprint/calibration.hpp"
#include "tasteprint/errors.hpp"

namespace tasteprint {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

nlohmann::json to_json(const CalibrationSet& cal) {
    return {{"schema_version", 1},
            {"id", cal.id},
            {"beta0", cal.beta0},
            {"beta1", cal.beta1},
            {"beta2", cal.beta2},
            {"alpha0", cal.alpha0},
            {"alpha1", cal.alpha1},
            {"distance_range", {cal.distance_range.min, cal.distance_range.max}},
            {"duration_range", {cal.duration_range.min, cal.duration_range.max}},
            {"pressure_mpa", cal.pressure_mpa},
            {"resolution_r2", cal.resolution_r2},
            {"amount_r2", cal.amount_r2},
            {"resolution_replicate_sd", cal.resolution_replicate_sd},
            {"amount_replicate_sd", cal.amount_replicate_sd}};
}

CalibrationSet calibration_from_json(const nlohmann::json& j) {
    CalibrationSet cal;
    try {
        cal.id = j.at("id").get<std::string>();
        cal.beta0 = j.at("beta0").get<double>();
        cal.beta1 = j.at("beta1").get<double>();
        cal.beta2 = j.at("beta2").get<double>();
        cal.alpha0 = j.at("alpha0").get<double>();
        cal.alpha1 = j.at("alpha1").get<double>();
        cal.distance_range = {j.at("distance_range").at(0).get<double>(), j.at("distance_range").at(1).get<double>()};
        cal.duration_range = {j.at("duration_range").at(0).get<double>(), j.at("duration_range").at(1).get<double>()};
        cal.pressure_mpa = j.at("pressure_mpa").get<double>();
        cal.resolution_r2 = j.at("resolution_r2").get<double>();
        cal.amount_r2 = j.at("amount_r2").get<double>();
        cal.resolution_replicate_sd = j.at("resolution_replicate_sd").get<double>();
        cal.amount_replicate_sd = j.at("amount_replicate_sd").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed calibration document: ") + e.what());
    }
    cal.validate();
    return cal;
}

nlohmann::json to_json(const FitReport& r) {
    nlohmann::json coeffs;
    if (r.model == "resolution" && r.coefficients.size() == 3)
        coeffs = {{"beta0", r.coefficients[0]}, {"beta1", r.coefficients[1]}, {"beta2", r.coefficients[2]}};
    else if (r.model == "amount" && r.coefficients.size() == 2)
        coeffs = {{"alpha0", r.coefficients[0]}, {"alpha1", r.coefficients[1]}};
    else
        coeffs = r.coefficients;
    return {{"model", r.model},
            {"coefficients", coeffs},
            {"r2", r.r2},
            {"residuals", r.residuals},
            {"mean_replicate_sd", r.mean_replicate_sd},
            {"sample_count", r.sample_count}};
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    for (auto& c : cells) {
        while (!c.empty() && std::isspace(static_cast<unsigned char>(c.front()))) c.remove_prefix(1);
        while (!c.empty() && std::isspace(static_cast<unsigned char>(c.back()))) c.remove_suffix(1);
    }
    return cells;
}

double cell_number(std::string_view cell, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw ParseError("invalid number '" + std::string(cell) + "'", line, ParseError::Unit::Line);
    return v;
}

}  // namespace

std::vector<CalibrationSample> parse_samples_csv(std::string_view text) {
    std::vector<CalibrationSample> out;
    std::size_t pos = 0, line_no = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        if (!header_seen) {
            if (line != kSampleCsvHeader)
                throw ParseError(std::string("expected header '") + kSampleCsvHeader + "'", line_no,
                                 ParseError::Unit::Line);
            header_seen = true;
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 5) throw ParseError("expected 5 columns", line_no, ParseError::Unit::Line);
        CalibrationSample s;
        s.distance_mm = cell_number(cells[0], line_no);
        s.duration_ms = cell_number(cells[1], line_no);
        if (!cells[2].empty()) s.diameter_mm = cell_number(cells[2], line_no);
        if (!cells[3].empty()) s.mass_mg = cell_number(cells[3], line_no);
        s.replicate = cells[4].empty() ? 0 : static_cast<int>(cell_number(cells[4], line_no));
        if (!s.diameter_mm && !s.mass_mg)
            throw ParseError("sample has neither diameter nor mass", line_no, ParseError::Unit::Line);
        if ((s.diameter_mm && *s.diameter_mm < 0.0) || (s.mass_mg && *s.mass_mg < 0.0))
            throw ParseError("negative measurement", line_no, ParseError::Unit::Line);
        out.push_back(s);
    }
    if (!header_seen) throw ParseError("empty sample file", line_no, ParseError::Unit::Line);
    return out;
}

std::string format_sample_row(const CalibrationSample& s) {
    std::string row = format_number(s.distance_mm) + "," + format_number(s.duration_ms) + ",";
    if (s.diameter_mm) row += format_number(*s.diameter_mm);
    row += ",";
    if (s.mass_mg) row += format_number(*s.mass_mg);
    row += "," + std::to_string(s.replicate);
    return row;
}

std::string render_samples_csv(std::span<const CalibrationSample> samples) {
    std::string out = std::string(kSampleCsvHeader) + "\n";
    for (const auto& s : samples) out += format_sample_row(s) + "\n";
    return out;
}

}  // namespace tasteprint
