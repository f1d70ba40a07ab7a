#pragma once

#include "crossreg/error_analysis.hpp"
#include "crossreg/forward_model.hpp"
#include "crossreg/monte_carlo.hpp"
#include "crossreg/spectral.hpp"
#include "crossreg/theorems.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace crossreg {

/// Draws random synthetic models for theorem checks. Even indices use a
/// geometric spectrum, odd ones a sorted log-uniform spectrum.
struct ModelBattery {
    Eigen::Index count = 50;
    Eigen::Index min_sensors = 3;
    Eigen::Index max_sensors = 10;
    Eigen::Index max_sources = 15;
    std::vector<double> noise_ratios{0.1, 1.0, 10.0};  // alpha^2 / omega^2
    std::uint64_t seed = 7;
};

std::vector<ForwardModel> random_models(const ModelBattery& battery);

/// Parameters of the filter-factor tables. Empty lists fall back to
/// lambda = {M/4, M/2, 3M/4} (deduplicated, at least 1) for two-step tSVD,
/// and sigma_k^2 at those k for Tikhonov and the one-step tSVD threshold.
struct FilterTableConfig {
    std::vector<double> tsvd_lambdas;
    std::vector<double> tsvd_thresholds;
    std::vector<double> tikhonov_lambdas;
};

struct ExperimentConfig {
    SyntheticSpec synthetic{20, 25, {}, GeometricDecay{1.0, 0.7}, 0};
    std::optional<std::filesystem::path> matrix_file;
    double omega2 = 1.0;
    double alpha2 = 1.0;
    Eigen::Index samples = 1 << 16;
    std::uint64_t seed = 0;
    Eigen::Index replications = 20;
    WelchConfig welch;
    SearchConfig search;
    SpectrumTarget target = SpectrumTarget::population;
    FilterTableConfig filters;
    ModelBattery battery;
    std::filesystem::path output = "out";

    /// Parses and validates a JSON config. Relative matrix paths resolve
    /// against `base_dir`. Throws ConfigError naming the offending field.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);

    void validate() const;
    ForwardModel build_model() const;
    WhiteNoiseScenario scenario(const ForwardModel& model) const;
};

/// Exit codes shared by the commands.
inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_config_error = 2;

/// x.csv, n.csv, y.csv, model.txt (+ sidecar) and manifest.json.
int cmd_simulate(const ExperimentConfig& cfg);

/// error_curves.csv and error_curves_summary.json.
int cmd_error_curves(const ExperimentConfig& cfg);

/// verify_theorems.json; returns exit_check_failed if a closed-form check fails.
int cmd_verify_theorems(const ExperimentConfig& cfg);

/// filter_factors_<approach>_<method>.csv for both approaches and methods,
/// plus filter_factors_summary.json.
int cmd_filter_factors(const ExperimentConfig& cfg);

/// Resolved default lambda lists for the filter tables.
FilterTableConfig resolve_filter_tables(const FilterTableConfig& requested, const ForwardModel& model);

} // namespace crossreg
