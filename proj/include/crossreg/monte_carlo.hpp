#pragma once

#include "crossreg/error_analysis.hpp"
#include "crossreg/forward_model.hpp"
#include "crossreg/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace crossreg {

/// Reference spectrum used for empirical spectrum errors.
///   population: omega2 * I at every bin.
///   welch:      Welch estimate of the simulated source x.
enum class SpectrumTarget { population, welch };

std::string_view to_string(SpectrumTarget target) noexcept;

/// Sufficient statistics of one realization (x, n, y = G x + n) that make
/// the empirical errors of any filter cheap to evaluate.
///
/// Signal error uses the sums over t of (v_i^t x)^2, (u_i^t y)^2 and
/// (v_i^t x)(u_i^t y); spectrum error uses C(f) = S^-1 U^t S^y(f) U S^-1 and
/// the target expressed in the V basis. Both reproduce the direct two-step
/// computation (reconstruct, then Welch) up to rounding.
class EmpiricalErrorEvaluator {
public:
    EmpiricalErrorEvaluator(const ForwardModel& model,
                            const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& n,
                            const WelchConfig& welch,
                            double omega2);

    /// sum_t ||W y(t) - x(t)||^2 for per-index factors `phi`.
    double signal_error(const Eigen::VectorXd& phi) const;

    /// sum_f ||V_1 (P o C(f)) V_1^t - S_target(f)||_F^2 for an M x M matrix of
    /// pair factors P (phi phi^t for the two-step path).
    double spectrum_error(const Eigen::MatrixXd& pair_factors, SpectrumTarget target) const;

    double signal_error(const FilterSpec& filter) const;
    double spectrum_error(const FilterSpec& filter, SpectrumTarget target) const;

    Eigen::Index samples() const noexcept { return samples_; }
    Eigen::Index bins() const noexcept { return static_cast<Eigen::Index>(projected_.size()); }

private:
    ForwardModel model_;
    Eigen::Index samples_;
    double omega2_;
    Eigen::VectorXd source_energy_;  // sum_t (v_i^t x)^2, i = 1..N
    Eigen::VectorXd data_energy_;    // sum_t (u_i^t y)^2, i = 1..M
    Eigen::VectorXd mixed_energy_;   // sum_t (v_i^t x)(u_i^t y), i = 1..M
    std::vector<Eigen::MatrixXcd> projected_;    // C(f)
    std::vector<Eigen::MatrixXcd> welch_block_;  // leading M x M block of V^t S^x(f) V
    double welch_outer_ = 0.0;                   // sum_f of |.|^2 outside that block
};

/// Simulates replication `index` of a white scenario. Source and noise use
/// child_seed(seed, 2 index) and child_seed(seed, 2 index + 1). alpha2 == 0
/// gives an identically zero noise.
struct Realization {
    Eigen::MatrixXd x;
    Eigen::MatrixXd n;
};

Realization simulate_realization(const ForwardModel& model,
                                 double omega2,
                                 double alpha2,
                                 Eigen::Index samples,
                                 std::uint64_t seed,
                                 std::uint64_t index);

/// Empirical curves averaged over replications, plus argmins. For Tikhonov
/// the optima are refined by golden-section search between grid points.
struct EmpiricalCurves {
    ErrorCurve signal;
    ErrorCurve spectrum;
    double signal_optimum = 0.0;    // argmin of the averaged signal curve
    double spectrum_optimum = 0.0;  // argmin of the averaged spectrum curve
    std::vector<double> replication_signal_argmin;
    std::vector<double> replication_spectrum_argmin;
};

/// Two-step empirical curves over `lambdas` (1..M for tSVD).
EmpiricalCurves empirical_curves(const std::vector<EmpiricalErrorEvaluator>& evaluators,
                                 Method method,
                                 const std::vector<double>& lambdas,
                                 const ForwardModel& model,
                                 SpectrumTarget target,
                                 double rel_tol);

} // namespace crossreg
