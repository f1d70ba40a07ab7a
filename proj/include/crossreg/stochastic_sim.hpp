#pragma once

#include "crossreg/filter.hpp"
#include "crossreg/forward_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string_view>

namespace crossreg {

enum class SeriesLabel { source, noise, measurement, reconstruction };

std::string_view to_string(SeriesLabel label) noexcept;

/// Real multivariate sample path stored as dim x T (one column per time step).
class TimeSeriesEnsemble {
public:
    /// Throws ShapeError for an empty matrix and InvalidSpec for non-finite entries.
    TimeSeriesEnsemble(Eigen::MatrixXd data, SeriesLabel label);

    const Eigen::MatrixXd& data() const noexcept { return data_; }
    SeriesLabel label() const noexcept { return label_; }
    Eigen::Index dim() const noexcept { return data_.rows(); }
    Eigen::Index samples() const noexcept { return data_.cols(); }

private:
    Eigen::MatrixXd data_;
    SeriesLabel label_;
};

/// Zero-mean white Gaussian process with covariance variance * I.
struct WhiteProcessSpec {
    Eigen::Index dim = 1;
    double variance = 1.0;
    std::uint64_t seed = 0;
    SeriesLabel label = SeriesLabel::source;
};

TimeSeriesEnsemble simulate_white(const WhiteProcessSpec& spec, Eigen::Index samples);

/// y(t) = G x(t) + n(t).
TimeSeriesEnsemble forward_measure(const ForwardModel& model,
                                   const TimeSeriesEnsemble& x,
                                   const TimeSeriesEnsemble& n);

/// x_lambda(t) = W_lambda y(t).
TimeSeriesEnsemble reconstruct(const ForwardModel& model,
                               const FilterSpec& filter,
                               const TimeSeriesEnsemble& y);

/// CSV with one row per time step. The first line is a comment of the form
/// "# label=<label> dim=<d> samples=<T>", the second holds column names.
void write_csv(std::ostream& out, const TimeSeriesEnsemble& series);

} // namespace crossreg
