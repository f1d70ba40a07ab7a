#pragma once

#include "crossreg/error_analysis.hpp"
#include "crossreg/forward_model.hpp"
#include "crossreg/monte_carlo.hpp"
#include "crossreg/spectral.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>

namespace crossreg {

struct WhiteNoiseScenario {
    ForwardModel model;
    double omega2 = 1.0;
    double alpha2 = 1.0;
    Eigen::Index samples = 1 << 16;
    WelchConfig welch;
    std::uint64_t seed = 0;
    Eigen::Index replications = 20;
    SearchConfig search;

    /// Throws ConfigError for omega2 <= 0, alpha2 < 0 or bad sizes.
    void validate() const;
};

/// Optimal parameters of the white-noise closed forms for one model.
struct ClosedFormCheck {
    Eigen::Index sensors = 0;
    Eigen::Index sources = 0;
    double omega2 = 0.0;
    double alpha2 = 0.0;
    bool degenerate = false;  // alpha2 == 0

    Eigen::Index tsvd_lambda_x = 0;
    Eigen::Index tsvd_lambda_s = 0;
    Eigen::Index tsvd_formula = 0;
    bool tsvd_equal = false;  // all three agree

    double tikhonov_lambda_x = 0.0;
    double tikhonov_expected_x = 0.0;  // alpha2 / omega2
    double tikhonov_x_rel_error = 0.0;
    bool tikhonov_x_ok = false;

    double tikhonov_lambda_s = 0.0;
    double tikhonov_ratio = 0.0;  // lambda_s / lambda_x
    bool tikhonov_half_ok = false;

    double h_lower = 0.0;  // h(sigma_M)
    double h_upper = 0.0;  // h(sigma_1)
    bool interval_ok = false;

    bool passed() const noexcept { return tsvd_equal && tikhonov_x_ok && tikhonov_half_ok && interval_ok; }
};

inline constexpr double interval_slack = 1e-8;

ClosedFormCheck check_closed_form(const ForwardModel& model,
                                  double omega2,
                                  double alpha2,
                                  const SearchConfig& search);

/// Monte Carlo counterpart of the closed-form checks.
struct MonteCarloCheck {
    Eigen::Index replications = 0;
    Eigen::Index samples = 0;
    SpectrumTarget target = SpectrumTarget::population;

    // Tikhonov, averaged curves
    double tikhonov_lambda_x = 0.0;
    double tikhonov_lambda_x_rel_error = 0.0;  // vs alpha2 / omega2
    double tikhonov_lambda_s = 0.0;
    double tikhonov_signal_rms = 0.0;    // RMS relative gap to the closed form
    double tikhonov_spectrum_rms = 0.0;
    double tikhonov_s_below_x_rate = 0.0;     // per replication
    double tikhonov_s_below_half_x_rate = 0.0;

    // tSVD
    Eigen::Index tsvd_lambda_x = 0;  // averaged curves
    Eigen::Index tsvd_lambda_s = 0;
    double tsvd_agreement_rate = 0.0;  // per replication argmin equality
    double tsvd_signal_rms = 0.0;
    double tsvd_spectrum_rms = 0.0;
};

/// RMS over grid points of (empirical - analytic) / analytic.
double rms_relative_gap(const ErrorCurve& empirical, const ErrorCurve& analytic);

/// Runs the Monte Carlo replications of `scenario` once and evaluates both targets.
std::vector<MonteCarloCheck> check_monte_carlo(const WhiteNoiseScenario& scenario);

struct TheoremReport {
    ClosedFormCheck closed_form;
    std::vector<MonteCarloCheck> monte_carlo;  // empty when replications == 0

    bool closed_form_passed() const noexcept { return closed_form.passed(); }
};

TheoremReport verify_theorems(const WhiteNoiseScenario& scenario);

nlohmann::json to_json(const ClosedFormCheck& check);
nlohmann::json to_json(const MonteCarloCheck& check);
nlohmann::json to_json(const TheoremReport& report);

} // namespace crossreg
