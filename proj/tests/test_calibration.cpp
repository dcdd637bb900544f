#include <doctest.h>

#include <Eigen/Dense>

#include "support.hpp"
#include "tasteprint/errors.hpp"

using namespace tasteprint;
using fixtures::amount_design;
using fixtures::resolution_design;

TEST_CASE("footprint model at published operating points") {
    const CalibrationSet cal = default_calibration();
    CHECK(predict_diameter(cal, 20, 20) == doctest::Approx(7.065).epsilon(1e-4));
    CHECK(predict_diameter(cal, 40, 60) == doctest::Approx(12.756).epsilon(1e-4));
    // Hand evaluation of the formula.
    CHECK(predict_diameter(cal, 30, 40) == doctest::Approx(-3.525 + 1.45 * std::sqrt(30.0) + 0.918 * std::sqrt(40.0)));
}

TEST_CASE("dose model and its inverse") {
    const CalibrationSet cal = default_calibration();
    CHECK(predict_mass(cal, 80) == doctest::Approx(6.354));
    CHECK(predict_mass(cal, 10) == doctest::Approx(0.614));
    CHECK(predict_mass(cal, 20) == doctest::Approx(1.434));
    const DurationChoice c = duration_for_mass(cal, 2.0);
    CHECK(c.raw_ms == doctest::Approx(26.902).epsilon(1e-4));
    CHECK(c.duration_ms == 27);
    CHECK_FALSE(c.clamped);
    const DurationChoice big = duration_for_mass(cal, 100.0);
    CHECK(big.duration_ms == 80);
    CHECK(big.clamped);
}

TEST_CASE("model warnings and domain errors") {
    const CalibrationSet cal = default_calibration();
    Diagnostics d;
    predict_diameter(cal, 50, 20, &d);
    CHECK(d.count("extrapolation") == 1);
    Diagnostics e;
    CHECK(predict_diameter(cal, 1, 1, &e) == 0.0);
    CHECK(e.count("sub-threshold") == 1);
    CHECK_THROWS_AS(predict_diameter(cal, 0, 20), DomainError);
    CHECK_THROWS_AS(predict_diameter(cal, 20, -1), DomainError);
    Diagnostics m;
    CHECK(predict_mass(cal, 1, &m) == 0.0);
    CHECK(m.count("negative-mass") == 1);
}

TEST_CASE("calibration validation") {
    CHECK_NOTHROW(default_calibration().validate());
    CalibrationSet bad = default_calibration();
    bad.alpha1 = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidCalibrationError);
    bad = default_calibration();
    bad.duration_range = {80, 10};
    CHECK_THROWS_AS(bad.validate(), InvalidCalibrationError);
}

TEST_CASE("duration scaling with layer height") {
    CHECK(scale_duration_for_layer_height(20, 0.8, 1.6) == 10);
    CHECK(scale_duration_for_layer_height(1, 0.1, 1.6) == 1);
    CHECK_THROWS_AS(scale_duration_for_layer_height(20, 0, 1.6), DomainError);
}

TEST_CASE("noise-free fits recover the generating coefficients") {
    const CalibrationSet truth = default_calibration();
    const FitReport r = fit_resolution_model(resolution_design(truth, 0.0, nullptr));
    CHECK(r.model == "resolution");
    CHECK(r.sample_count == 27);
    CHECK(r.coefficients[0] == doctest::Approx(truth.beta0).epsilon(1e-9));
    CHECK(r.coefficients[1] == doctest::Approx(truth.beta1).epsilon(1e-9));
    CHECK(r.coefficients[2] == doctest::Approx(truth.beta2).epsilon(1e-9));
    CHECK(r.r2 == doctest::Approx(1.0));
    CHECK(r.mean_replicate_sd == doctest::Approx(0.0));

    const FitReport a = fit_amount_model(amount_design(truth, 0.0, nullptr));
    CHECK(a.coefficients[0] == doctest::Approx(truth.alpha0).epsilon(1e-9));
    CHECK(a.coefficients[1] == doctest::Approx(truth.alpha1).epsilon(1e-9));
}

TEST_CASE("fit residuals and replicate SD") {
    std::vector<CalibrationSample> s;
    for (double t : {10.0, 20.0})
        for (double m : {1.0, 3.0}) s.push_back({20.0, t, std::nullopt, m + t / 10.0, 0});
    const FitReport r = fit_amount_model(s);
    // Conditions hold {2, 4} and {3, 5}: sample SD sqrt(2) each.
    CHECK(r.mean_replicate_sd == doctest::Approx(std::sqrt(2.0)));
    CHECK(r.coefficients[1] == doctest::Approx(0.1));
    REQUIRE(r.residuals.size() == 4);
    CHECK(r.residuals[0] == doctest::Approx(-1.0));
}

TEST_CASE("degenerate designs are rejected") {
    std::vector<CalibrationSample> one_distance;
    for (double t : {20.0, 40.0, 60.0}) one_distance.push_back({20.0, t, 5.0 + t / 10, std::nullopt, 1});
    CHECK_THROWS_AS(fit_resolution_model(one_distance), DegenerateDesignError);
    std::vector<CalibrationSample> one_duration{{20, 10, std::nullopt, 0.5, 1}, {20, 10, std::nullopt, 0.6, 2}};
    CHECK_THROWS_AS(fit_amount_model(one_duration), DegenerateDesignError);
    CHECK_THROWS_AS(fit_amount_model(std::vector<CalibrationSample>{}), DegenerateDesignError);
}

// Ensemble behaviour of the noisy designs: the estimator is unbiased and its
// spread matches sigma^2 (X'X)^-1.
TEST_CASE("ensemble: resolution fits are unbiased with the textbook spread") {
    const CalibrationSet truth = default_calibration();
    const auto design = resolution_design(truth, 0.0, nullptr);
    Eigen::MatrixXd X(design.size(), 3);
    for (std::size_t i = 0; i < design.size(); ++i)
        X.row(long(i)) << 1.0, std::sqrt(design[i].distance_mm), std::sqrt(design[i].duration_ms);
    const Eigen::MatrixXd cov = 0.79 * 0.79 * (X.transpose() * X).inverse();

    const int runs = 4000;
    std::mt19937_64 rng(1234);
    Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero();
    double r2 = 0.0;
    for (int i = 0; i < runs; ++i) {
        const FitReport r = fit_resolution_model(resolution_design(truth, 0.79, &rng));
        const Eigen::Vector3d b(r.coefficients[0], r.coefficients[1], r.coefficients[2]);
        sum += b;
        sq += b.cwiseProduct(b);
        r2 += r.r2;
    }
    const Eigen::Vector3d mean = sum / runs;
    const Eigen::Vector3d var = sq / runs - mean.cwiseProduct(mean);
    const Eigen::Vector3d want(truth.beta0, truth.beta1, truth.beta2);
    for (int k = 0; k < 3; ++k) {
        const double se = std::sqrt(cov(k, k) / runs);
        CHECK(std::abs(mean[k] - want[k]) < 4 * se);
        CHECK(std::sqrt(var[k]) == doctest::Approx(std::sqrt(cov(k, k))).epsilon(0.05));
    }
    // Signal variance against noise puts the typical R^2 in the mid 0.8s.
    CHECK(r2 / runs > 0.80);
    CHECK(r2 / runs < 0.90);
}

TEST_CASE("ensemble: amount fits are unbiased") {
    const CalibrationSet truth = default_calibration();
    std::mt19937_64 rng(99);
    const int runs = 4000;
    double a0 = 0, a1 = 0, r2 = 0;
    for (int i = 0; i < runs; ++i) {
        const FitReport r = fit_amount_model(amount_design(truth, 0.2, &rng));
        a0 += r.coefficients[0];
        a1 += r.coefficients[1];
        r2 += r.r2;
    }
    CHECK(a0 / runs == doctest::Approx(truth.alpha0).epsilon(0.05));
    CHECK(a1 / runs == doctest::Approx(truth.alpha1).epsilon(0.002));
    CHECK(r2 / runs > 0.98);
}

TEST_CASE("sample CSV round trip and errors") {
    std::mt19937_64 rng(5);
    auto samples = resolution_design(default_calibration(), 0.79, &rng);
    const auto more = amount_design(default_calibration(), 0.0, nullptr);
    samples.insert(samples.end(), more.begin(), more.end());
    const std::string csv = render_samples_csv(samples);
    CHECK(csv.rfind(std::string(kSampleCsvHeader) + "\n", 0) == 0);
    CHECK(parse_samples_csv(csv) == samples);

    const std::string bad = std::string(kSampleCsvHeader) + "\n20,20,7.1,,1\n20,x,7.0,,2\n";
    try {
        parse_samples_csv(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 3);
    }
    CHECK_THROWS_AS(parse_samples_csv("a,b\n"), ParseError);
}

TEST_CASE("calibration JSON and the shipped default") {
    const CalibrationSet cal = default_calibration();
    CHECK(calibration_from_json(to_json(cal)) == cal);
    CHECK(load_calibration(std::string(TASTEPRINT_DATA_DIR) + "/default_calibration.json") == cal);
    CHECK(load_profile(std::string(TASTEPRINT_DATA_DIR) + "/default_profile.json") == default_profile());
    CHECK_THROWS_AS(calibration_from_json(nlohmann::json{{"id", 3}}), FormatError);

    const FitReport r = fit_amount_model(amount_design(cal, 0.0, nullptr));
    const CalibrationSet fitted = apply_fit(CalibrationSet{}, r);
    CHECK(fitted.alpha1 == doctest::Approx(cal.alpha1));
    CHECK(fitted.amount_r2 == doctest::Approx(1.0));
}
