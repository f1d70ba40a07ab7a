#pragma once

#include "crossreg/filter.hpp"
#include "crossreg/forward_model.hpp"
#include "crossreg/spectral.hpp"
#include "crossreg/stochastic_sim.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace crossreg {

/// How the source cross-spectrum is regularized.
///   two_step: reconstruct the time series, then run Welch on the estimate;
///             pair factors are phi_i * phi_j.
///   one_step: filter the measured cross-spectrum through G (x) G directly;
///             pair factors act on the products sigma_i * sigma_j.
enum class Approach { one_step, two_step };

std::string_view to_string(Approach approach) noexcept;

/// Per-index filter factors phi_i, i = 1..M.
///   tSVD:     1 for i <= lambda, 0 otherwise.
///   Tikhonov: sigma_i^2 / (sigma_i^2 + lambda).
Eigen::VectorXd filter_factors(const ForwardModel& model, const FilterSpec& filter);

/// M x M matrix of pair factors for the cross-spectrum.
///   two_step: phi_i phi_j.
///   one_step, Tikhonov: sigma_i^2 sigma_j^2 / (sigma_i^2 sigma_j^2 + lambda).
///   one_step, tSVD:     1 if sigma_i sigma_j >= lambda, else 0 (lambda is a
///                       real threshold > 0 on the product).
Eigen::MatrixXd pair_filter_factors(const ForwardModel& model, const FilterSpec& filter, Approach approach);

/// Welch cross-spectrum of reconstruct(model, filter, y).
CrossSpectrum two_step_cross_spectrum(const ForwardModel& model,
                                      const FilterSpec& filter,
                                      const TimeSeriesEnsemble& y,
                                      const WelchConfig& cfg);

/// Direct estimate sum_{i,j} phi~_{ij} (u_i^t S^y(f) u_j)/(sigma_i sigma_j) v_i v_j^t,
/// evaluated as V_1 [Phi~ o (S^-1 U^t S^y U S^-1)] V_1^t per bin.
///
/// When `noise` is given its spectrum is subtracted from S^y first.
CrossSpectrum one_step_cross_spectrum(const ForwardModel& model,
                                      const FilterSpec& filter,
                                      const CrossSpectrum& sy,
                                      const std::optional<CrossSpectrum>& noise = std::nullopt);

struct PairFilterEntry {
    double sigma_product;
    double factor;
    Eigen::Index i;  // one-based
    Eigen::Index j;  // one-based
};

/// All M^2 pair factors sorted by ascending sigma product, ties by (i, j).
std::vector<PairFilterEntry> pair_filter_table(const ForwardModel& model,
                                               const FilterSpec& filter,
                                               Approach approach);

/// Header "sigma_product,factor,i,j,method,approach,lambda" when
/// `header` is set, then one row per entry.
void write_pair_filter_csv(std::ostream& out,
                           const std::vector<PairFilterEntry>& table,
                           const FilterSpec& filter,
                           Approach approach,
                           bool header = true);

} // namespace crossreg

namespace crossreg {

/// True if factors never decrease as the sigma product grows (entries with
/// equal products must carry equal factors up to `tol`).
bool is_monotone_in_product(const std::vector<PairFilterEntry>& table, double tol = 1e-12);

/// A pair (lower, higher) with lower.sigma_product < higher.sigma_product but
/// lower.factor > higher.factor, if the table has one.
struct JitterWitness {
    PairFilterEntry lower;
    PairFilterEntry higher;
};

std::optional<JitterWitness> find_jitter_witness(const std::vector<PairFilterEntry>& table);

} // namespace crossreg
