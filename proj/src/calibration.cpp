#include "tasteprint/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "tasteprint/errors.hpp"

namespace tasteprint {

void CalibrationSet::validate() const {
    auto fail = [](const std::string& what) { throw InvalidCalibrationError("calibration: " + what); };
    for (double v : {beta0, beta1, beta2, alpha0, alpha1, pressure_mpa})
        if (!std::isfinite(v)) fail("non-finite coefficient");
    if (!(duration_range.min > 0.0) || duration_range.min > duration_range.max) fail("bad duration range");
    if (!(distance_range.min > 0.0) || distance_range.min > distance_range.max) fail("bad distance range");
    if (!(alpha1 > 0.0)) fail("alpha1 must be positive");
    for (double r2 : {resolution_r2, amount_r2})
        if (!(r2 >= 0.0 && r2 <= 1.0)) fail("R^2 outside [0, 1]");
}

CalibrationSet default_calibration() {
    CalibrationSet cal;
    cal.id = "filter-paper-0.10MPa";
    cal.beta0 = -3.525;
    cal.beta1 = 1.450;
    cal.beta2 = 0.918;
    cal.alpha0 = -0.206;
    cal.alpha1 = 0.082;
    cal.distance_range = {20.0, 40.0};
    cal.duration_range = {10.0, 80.0};
    cal.pressure_mpa = 0.10;
    cal.resolution_r2 = 0.86;
    cal.amount_r2 = 0.99;
    cal.resolution_replicate_sd = 0.79;
    cal.amount_replicate_sd = 0.2;
    return cal;
}

double predict_diameter(const CalibrationSet& cal, double distance_mm, double duration_ms, Diagnostics* diag) {
    if (!(distance_mm > 0.0) || !(duration_ms > 0.0))
        throw DomainError("footprint model needs positive distance and duration");
    if (!cal.distance_range.contains(distance_mm))
        note(diag, Severity::Warning, "extrapolation",
             "distance " + format_number(distance_mm) + " mm outside calibrated range");
    if (!cal.duration_range.contains(duration_ms))
        note(diag, Severity::Warning, "extrapolation",
             "duration " + format_number(duration_ms) + " ms outside calibrated range");
    const double d = cal.beta0 + cal.beta1 * std::sqrt(distance_mm) + cal.beta2 * std::sqrt(duration_ms);
    if (d <= 0.0) {
        note(diag, Severity::Warning, "sub-threshold", "footprint model is non-positive; using 0 mm");
        return 0.0;
    }
    return d;
}

double predict_mass(const CalibrationSet& cal, double duration_ms, Diagnostics* diag) {
    if (!(duration_ms > 0.0)) throw DomainError("dose model needs a positive duration");
    const double m = cal.alpha0 + cal.alpha1 * duration_ms;
    if (m < 0.0) {
        note(diag, Severity::Warning, "negative-mass", "dose model is negative; using 0 mg");
        return 0.0;
    }
    return m;
}

DurationChoice duration_for_mass(const CalibrationSet& cal, double target_mg) {
    if (!(cal.alpha1 > 0.0)) throw InvalidCalibrationError("dose model slope must be positive");
    if (!(target_mg > 0.0)) throw DomainError("target mass must be positive");
    DurationChoice c;
    c.raw_ms = (target_mg - cal.alpha0) / cal.alpha1;
    const double rounded = std::round(c.raw_ms);
    const double lo = std::ceil(cal.duration_range.min);
    const double hi = std::floor(cal.duration_range.max);
    c.clamped = rounded < lo || rounded > hi;
    c.duration_ms = static_cast<int>(std::clamp(rounded, lo, hi));
    return c;
}

int scale_duration_for_layer_height(double duration_ms, double layer_height, double reference_height) {
    if (!(duration_ms > 0.0) || !(layer_height > 0.0) || !(reference_height > 0.0))
        throw DomainError("duration scaling needs positive arguments");
    return std::max(1, static_cast<int>(std::lround(duration_ms * layer_height / reference_height)));
}

namespace {

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_replicate_sd(const std::map<std::pair<double, double>, std::vector<double>>& groups) {
    double total = 0.0;
    int n = 0;
    for (const auto& [key, values] : groups) {
        if (values.size() < 2) continue;
        total += sample_sd(values);
        ++n;
    }
    return n > 0 ? total / n : 0.0;
}

FitReport ordinary_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::string model) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) throw DegenerateDesignError(model + " fit: design matrix is rank deficient");
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * beta;

    FitReport r;
    r.model = std::move(model);
    r.coefficients.assign(beta.data(), beta.data() + beta.size());
    r.residuals.assign(resid.data(), resid.data() + resid.size());
    r.sample_count = static_cast<std::size_t>(y.size());
    const double ss_res = resid.squaredNorm();
    const double ss_tot = (y.array() - y.mean()).square().sum();
    if (ss_tot > 0.0)
        r.r2 = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
    else
        r.r2 = ss_res == 0.0 ? 1.0 : 0.0;
    return r;
}

}  // namespace

FitReport fit_resolution_model(std::span<const CalibrationSample> samples) {
    std::vector<const CalibrationSample*> rows;
    std::set<double> distances, durations;
    std::map<std::pair<double, double>, std::vector<double>> groups;
    for (const auto& s : samples) {
        if (!s.diameter_mm) continue;
        if (!(s.distance_mm > 0.0) || !(s.duration_ms > 0.0))
            throw DomainError("resolution sample needs positive distance and duration");
        rows.push_back(&s);
        distances.insert(s.distance_mm);
        durations.insert(s.duration_ms);
        groups[{s.distance_mm, s.duration_ms}].push_back(*s.diameter_mm);
    }
    if (rows.size() < 4 || distances.size() < 2 || durations.size() < 2)
        throw DegenerateDesignError(
            "resolution fit needs >= 4 diameter samples over >= 2 distances and >= 2 durations");

    Eigen::MatrixXd X(rows.size(), 3);
    Eigen::VectorXd y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = std::sqrt(rows[i]->distance_mm);
        X(i, 2) = std::sqrt(rows[i]->duration_ms);
        y(i) = *rows[i]->diameter_mm;
    }
    FitReport r = ordinary_least_squares(X, y, "resolution");
    r.mean_replicate_sd = mean_replicate_sd(groups);
    return r;
}

FitReport fit_amount_model(std::span<const CalibrationSample> samples) {
    std::vector<const CalibrationSample*> rows;
    std::set<double> durations;
    std::map<std::pair<double, double>, std::vector<double>> groups;
    for (const auto& s : samples) {
        if (!s.mass_mg) continue;
        if (!(s.duration_ms > 0.0)) throw DomainError("amount sample needs a positive duration");
        rows.push_back(&s);
        durations.insert(s.duration_ms);
        groups[{s.distance_mm, s.duration_ms}].push_back(*s.mass_mg);
    }
    if (durations.size() < 2) throw DegenerateDesignError("amount fit needs >= 2 distinct durations");

    Eigen::MatrixXd X(rows.size(), 2);
    Eigen::VectorXd y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = rows[i]->duration_ms;
        y(i) = *rows[i]->mass_mg;
    }
    FitReport r = ordinary_least_squares(X, y, "amount");
    r.mean_replicate_sd = mean_replicate_sd(groups);
    return r;
}

CalibrationSet apply_fit(CalibrationSet base, const FitReport& report) {
    if (report.model == "resolution" && report.coefficients.size() == 3) {
        base.beta0 = report.coefficients[0];
        base.beta1 = report.coefficients[1];
        base.beta2 = report.coefficients[2];
        base.resolution_r2 = report.r2;
        base.resolution_replicate_sd = report.mean_replicate_sd;
    } else if (report.model == "amount" && report.coefficients.size() == 2) {
        base.alpha0 = report.coefficients[0];
        base.alpha1 = report.coefficients[1];
        base.amount_r2 = report.r2;
        base.amount_replicate_sd = report.mean_replicate_sd;
    } else {
        throw InvalidCalibrationError("fit report does not match a known model");
    }
    return base;
}

}  // namespace tasteprint
