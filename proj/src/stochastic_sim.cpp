#include "crossreg/stochastic_sim.hpp"

#include "crossreg/errors.hpp"
#include "crossreg/rng.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace crossreg {

std::string_view to_string(SeriesLabel label) noexcept {
    switch (label) {
    case SeriesLabel::source: return "source";
    case SeriesLabel::noise: return "noise";
    case SeriesLabel::measurement: return "measurement";
    case SeriesLabel::reconstruction: return "reconstruction";
    }
    return "unknown";
}

TimeSeriesEnsemble::TimeSeriesEnsemble(Eigen::MatrixXd data, SeriesLabel label)
    : data_(std::move(data)), label_(label) {
    if (data_.rows() < 1 || data_.cols() < 1) {
        throw ShapeError("time series needs dim >= 1 and at least one sample");
    }
    if (!data_.allFinite()) {
        throw InvalidSpec("time series contains non-finite entries");
    }
}

TimeSeriesEnsemble simulate_white(const WhiteProcessSpec& spec, Eigen::Index samples) {
    if (spec.dim < 1) {
        throw InvalidSpec("white process dimension must be >= 1");
    }
    if (!(spec.variance > 0.0) || !std::isfinite(spec.variance)) {
        throw InvalidSpec("white process variance must be positive and finite");
    }
    if (samples < 1) {
        throw InvalidSpec("number of samples must be >= 1");
    }
    GaussianSource gauss(spec.seed);
    return TimeSeriesEnsemble(gauss.matrix(spec.dim, samples, std::sqrt(spec.variance)), spec.label);
}

TimeSeriesEnsemble forward_measure(const ForwardModel& model,
                                   const TimeSeriesEnsemble& x,
                                   const TimeSeriesEnsemble& n) {
    if (x.dim() != model.sources() || n.dim() != model.sensors() || x.samples() != n.samples()) {
        std::ostringstream msg;
        msg << "forward_measure: expected x with " << model.sources() << " rows and n with "
            << model.sensors() << " rows over equal samples, got " << x.dim() << "x" << x.samples()
            << " and " << n.dim() << "x" << n.samples();
        throw ShapeError(msg.str());
    }
    Eigen::MatrixXd y = model.matrix() * x.data();
    y += n.data();
    return TimeSeriesEnsemble(std::move(y), SeriesLabel::measurement);
}

TimeSeriesEnsemble reconstruct(const ForwardModel& model,
                               const FilterSpec& filter,
                               const TimeSeriesEnsemble& y) {
    if (y.dim() != model.sensors()) {
        throw ShapeError("reconstruct: measurement dimension differs from the sensor count");
    }
    return TimeSeriesEnsemble(inverse_operator(model, filter) * y.data(), SeriesLabel::reconstruction);
}

void write_csv(std::ostream& out, const TimeSeriesEnsemble& series) {
    const auto label = to_string(series.label());
    out << "# label=" << label << " dim=" << series.dim() << " samples=" << series.samples() << '\n';
    for (Eigen::Index k = 0; k < series.dim(); ++k) {
        out << (k ? "," : "") << label << '_' << k;
    }
    out << '\n';
    char buf[32];
    const Eigen::MatrixXd& d = series.data();
    for (Eigen::Index t = 0; t < series.samples(); ++t) {
        for (Eigen::Index k = 0; k < series.dim(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", d(k, t));
            if (k) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

} // namespace crossreg
