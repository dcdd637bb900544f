#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tasteprint/diagnostics.hpp"

namespace tasteprint {

struct Range {
    double min = 0.0;
    double max = 0.0;

    bool contains(double v) const { return v >= min && v <= max; }
    bool operator==(const Range&) const = default;
};

/// Coefficients of the spray footprint model
///   diameter_mm = beta0 + beta1 * sqrt(distance_mm) + beta2 * sqrt(duration_ms)
/// and the dose model
///   mass_mg = alpha0 + alpha1 * duration_ms,
/// with the ranges they were calibrated over and their fit diagnostics.
struct CalibrationSet {
    std::string id = "default";
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    Range distance_range{20.0, 40.0};
    Range duration_range{10.0, 80.0};
    double pressure_mpa = 0.10;  // metadata only; both models hold a single pressure
    double resolution_r2 = 0.0;
    double amount_r2 = 0.0;
    double resolution_replicate_sd = 0.0;
    double amount_replicate_sd = 0.0;

    /// Throws InvalidCalibrationError when an invariant is violated.
    void validate() const;
    bool operator==(const CalibrationSet&) const = default;
};

/// Filter-paper calibration at 0.10 MPa shipped with the toolchain.
CalibrationSet default_calibration();

/// Footprint diameter in mm. Returns 0 (with a warning) when the model is
/// non-positive; warns when extrapolating beyond the calibrated ranges.
double predict_diameter(const CalibrationSet& cal, double distance_mm, double duration_ms,
                        Diagnostics* diag = nullptr);

/// Deposited mass in mg, clamped at zero.
double predict_mass(const CalibrationSet& cal, double duration_ms, Diagnostics* diag = nullptr);

struct DurationChoice {
    int duration_ms = 0;  // rounded and clamped into duration_range
    double raw_ms = 0.0;  // exact inverse, before rounding
    bool clamped = false;
};

/// Inverts the dose model to the nearest whole millisecond.
DurationChoice duration_for_mass(const CalibrationSet& cal, double target_mg);

/// round(duration * layer_height / reference_height), at least 1 ms.
int scale_duration_for_layer_height(double duration_ms, double layer_height, double reference_height);

struct CalibrationSample {
    double distance_mm = 0.0;
    double duration_ms = 0.0;
    std::optional<double> diameter_mm;
    std::optional<double> mass_mg;
    int replicate = 0;

    bool operator==(const CalibrationSample&) const = default;
};

struct FitReport {
    std::string model;  // "resolution" or "amount"
    std::vector<double> coefficients;  // (beta0, beta1, beta2) or (alpha0, alpha1)
    double r2 = 0.0;
    std::vector<double> residuals;  // observed - fitted, in sample order
    double mean_replicate_sd = 0.0;
    std::size_t sample_count = 0;
};

/// OLS on columns [1, sqrt(distance), sqrt(duration)] over samples carrying a
/// diameter. Throws DegenerateDesignError for rank-deficient designs.
FitReport fit_resolution_model(std::span<const CalibrationSample> samples);

/// OLS on columns [1, duration] over samples carrying a mass.
FitReport fit_amount_model(std::span<const CalibrationSample> samples);

/// Copies fitted coefficients and diagnostics into `base`.
CalibrationSet apply_fit(CalibrationSet base, const FitReport& report);

nlohmann::json to_json(const CalibrationSet& cal);
CalibrationSet calibration_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FitReport& report);

inline constexpr const char* kSampleCsvHeader = "distance_mm,duration_ms,diameter_mm,mass_mg,replicate";

std::vector<CalibrationSample> parse_samples_csv(std::string_view text);
std::string format_sample_row(const CalibrationSample& s);
std::string render_samples_csv(std::span<const CalibrationSample> samples);

/// Shortest decimal representation that round-trips.
std::string format_number(double v);

}  // namespace tasteprint
