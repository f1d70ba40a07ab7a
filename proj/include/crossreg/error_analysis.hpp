#pragma once

#include "crossreg/filter.hpp"
#include "crossreg/forward_model.hpp"
#include "crossreg/spectral.hpp"
#include "crossreg/stochastic_sim.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace crossreg {

// ---------------------------------------------------------------------------
// Empirical errors
// ---------------------------------------------------------------------------

/// sum_t ||x_rec(t) - x_true(t)||^2
double empirical_error_x(const Eigen::MatrixXd& x_true, const Eigen::MatrixXd& x_rec);
double empirical_error_x(const TimeSeriesEnsemble& x_true, const TimeSeriesEnsemble& x_rec);

/// sum_f ||S_est(f) - S_true(f)||_F^2
double empirical_error_s(const CrossSpectrum& s_est, const CrossSpectrum& s_true);

// ---------------------------------------------------------------------------
// Filter-factor decompositions
// ---------------------------------------------------------------------------

/// Signal error split along the right singular vectors.
///   null_space:     sum_t sum_{i>M} (v_i^t x)^2
///   regularization: sum_t sum_{i<=M} (phi_i - 1)^2 (v_i^t x)^2
///   perturbation:   sum_t sum_{i<=M} phi_i^2 (u_i^t n)^2 / sigma_i^2
///   cross:          sum_t sum_{i<=M} 2 (phi_i - 1)(phi_i / sigma_i)(v_i^t x)(u_i^t n)
/// The cross term vanishes in expectation for independent x and n; keeping
/// it makes total() equal the empirical error exactly.
struct SignalErrorTerms {
    double null_space = 0.0;
    double regularization = 0.0;
    double perturbation = 0.0;
    double cross = 0.0;

    double total() const noexcept { return null_space + regularization + perturbation + cross; }
    double total_without_cross() const noexcept { return null_space + regularization + perturbation; }
};

SignalErrorTerms analytic_error_x_filterform(const ForwardModel& model,
                                             const FilterSpec& filter,
                                             const Eigen::MatrixXd& x,
                                             const Eigen::MatrixXd& n);

/// Two-step cross-spectrum error split in the basis v_r v_c^t.
///
/// With a_rc = v_r^t S^x v_c, b_rc = u_r^t S^n u_c and p_rc = phi_r phi_c:
///   null_space:     sum |a_rc|^2 over pairs with r > M or c > M
///   regularization: sum (p - 1)^2 |a|^2
///   perturbation:   sum (p / (sigma_r sigma_c))^2 |b|^2
///   mixed:          sum 2 (p - 1) p / (sigma_r sigma_c) Re(conj(a) b)
///   cross:          everything contributed by S^{xn} and S^{nx}
/// all summed over frequency bins.
struct SpectrumErrorTerms {
    double null_space = 0.0;
    double regularization = 0.0;
    double perturbation = 0.0;
    double mixed = 0.0;
    double cross = 0.0;

    double total() const noexcept { return null_space + regularization + perturbation + mixed + cross; }
    double total_without_cross() const noexcept { return null_space + regularization + perturbation + mixed; }
};

/// `sxn` is the N x M mixed spectrum of x and n; pass std::nullopt to drop it.
SpectrumErrorTerms analytic_error_s_filterform(const ForwardModel& model,
                                               const FilterSpec& filter,
                                               const CrossSpectrum& sx,
                                               const CrossSpectrum& sn,
                                               const std::optional<CrossSpectrum>& sxn = std::nullopt);

// ---------------------------------------------------------------------------
// White-noise closed forms
// ---------------------------------------------------------------------------

/// Expected errors when x and n are white with variances omega2 and alpha2.
/// For tSVD `mixed` is identically zero.
struct WhiteErrorTerms {
    double null_space = 0.0;
    double regularization = 0.0;
    double perturbation = 0.0;
    double mixed = 0.0;

    double total() const noexcept { return null_space + regularization + perturbation + mixed; }
};

/// tSVD:     (N - lambda) T omega2 + T alpha2 sum_{i<=lambda} 1/sigma_i^2
/// Tikhonov: T (N-M) omega2 + T omega2 sum lambda^2/(sigma_i^2+lambda)^2
///           + T alpha2 sum sigma_i^2/(sigma_i^2+lambda)^2
WhiteErrorTerms closed_form_error_x_white(const ForwardModel& model,
                                          const FilterSpec& filter,
                                          double omega2,
                                          double alpha2,
                                          double samples);

/// tSVD:     (N - lambda) L omega2^2 + L alpha2^2 sum_{i<=lambda} 1/sigma_i^4
/// Tikhonov: with g_i = sigma_i^4/(sigma_i^2+lambda)^2,
///           L (N-M) omega2^2 + L omega2^2 sum (g_i - 1)^2
///           + L alpha2^2 sum sigma_i^4/(sigma_i^2+lambda)^4
///           + 2 L omega2 alpha2 sum (g_i - 1) sigma_i^2/(sigma_i^2+lambda)^2
WhiteErrorTerms closed_form_error_s_white(const ForwardModel& model,
                                          const FilterSpec& filter,
                                          double omega2,
                                          double alpha2,
                                          double bins);

struct ErrorDerivatives {
    double signal;
    double spectrum;
};

/// d/dlambda of the Tikhonov closed forms (scaled by `samples` and `bins`).
ErrorDerivatives closed_form_derivatives(const ForwardModel& model,
                                         double lambda,
                                         double omega2,
                                         double alpha2,
                                         double samples = 1.0,
                                         double bins = 1.0);

/// h(z) = -z^2 + sqrt(z^4 + z^2 alpha2/omega2). Increasing, bounded by alpha2/(2 omega2).
double h_function(double z, double omega2, double alpha2);

/// Optimal tSVD index under white noise: max{lambda : sigma_lambda >= alpha/omega}.
/// Returns 1 when no singular value reaches alpha/omega (the error grows
/// from the first retained component on) and M when alpha2 == 0.
Eigen::Index tsvd_white_optimum(const ForwardModel& model, double omega2, double alpha2);

// ---------------------------------------------------------------------------
// Error curves and parameter search
// ---------------------------------------------------------------------------

enum class ErrorKind { signal, spectrum };
enum class ErrorSource { empirical, analytic_filter_form, analytic_white_closed_form };

std::string_view to_string(ErrorKind kind) noexcept;
std::string_view to_string(ErrorSource source) noexcept;

struct ErrorCurve {
    Method method;
    ErrorKind kind;
    ErrorSource source;
    std::vector<double> lambdas;
    std::vector<double> values;

    /// Throws InvalidParameter if sizes differ, the grid is not strictly
    /// increasing or a value is negative or non-finite.
    void validate() const;

    /// Index of the smallest value; the last one wins among exact ties.
    std::size_t argmin() const;
    double argmin_lambda() const { return lambdas[argmin()]; }
    double min_value() const { return values[argmin()]; }
};

/// Samples `eval` on `lambdas` and validates the result.
ErrorCurve make_curve(Method method,
                      ErrorKind kind,
                      ErrorSource source,
                      std::vector<double> lambdas,
                      const std::function<double(double)>& eval);

/// Tikhonov search: a log grid over [lower_ratio, upper_ratio] * scale plus
/// lambda = 0, then golden-section refinement of the best grid cell.
struct SearchConfig {
    Eigen::Index grid_points = 200;
    double lower_ratio = 1e-6;
    double upper_ratio = 1e3;
    double rel_tol = 1e-6;
};

/// 0 followed by grid_points log-spaced values.
std::vector<double> tikhonov_grid(double scale, const SearchConfig& search);

struct Optimum {
    double lambda = 0.0;
    double value = 0.0;
    double lower = 0.0;      // final bracket
    double upper = 0.0;
    double tolerance = 0.0;  // upper - lower after refinement
};

/// Exhaustive minimum over lambda = 1..count; the largest lambda wins among ties.
Optimum find_optimal_discrete(const std::function<double(Eigen::Index)>& eval, Eigen::Index count);

/// Grid bracketing plus golden-section search. Throws NoMinimumBracketed if
/// the best grid point is the last one.
Optimum find_optimal_continuous(const std::function<double(double)>& eval,
                                double scale,
                                const SearchConfig& search);

/// Golden-section search on [lower, upper] until upper - lower <= rel_tol * max(|x|, tiny).
Optimum golden_section(const std::function<double(double)>& eval, double lower, double upper, double rel_tol);

void write_csv(std::ostream& out, const std::vector<ErrorCurve>& curves);

} // namespace crossreg
