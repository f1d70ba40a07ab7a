#include "crossreg/monte_carlo.hpp"

#include "crossreg/errors.hpp"
#include "crossreg/regularizers.hpp"
#include "crossreg/rng.hpp"

#include <cmath>

namespace crossreg {

using cd = std::complex<double>;

std::string_view to_string(SpectrumTarget target) noexcept {
    return target == SpectrumTarget::population ? "population" : "welch";
}

EmpiricalErrorEvaluator::EmpiricalErrorEvaluator(const ForwardModel& model,
                                                 const Eigen::MatrixXd& x,
                                                 const Eigen::MatrixXd& n,
                                                 const WelchConfig& welch,
                                                 double omega2)
    : model_(model), samples_(x.cols()), omega2_(omega2) {
    const Eigen::Index m = model.sensors();
    if (x.rows() != model.sources() || n.rows() != m || n.cols() != x.cols()) {
        throw ShapeError("evaluator expects x (N x T) and n (M x T)");
    }
    const Eigen::MatrixXd y = model.matrix() * x + n;
    const Eigen::MatrixXd p = model.v().transpose() * x;
    const Eigen::MatrixXd q = model.u().transpose() * y;
    source_energy_ = p.rowwise().squaredNorm();
    data_energy_ = q.rowwise().squaredNorm();
    mixed_energy_ = p.topRows(m).cwiseProduct(q).rowwise().sum();

    const CrossSpectrum sy = welch_cross_spectrum(y, welch);
    const CrossSpectrum sx = welch_cross_spectrum(x, welch);
    const Eigen::MatrixXcd u = model.u().cast<cd>();
    const Eigen::MatrixXcd v = model.v().cast<cd>();
    const Eigen::VectorXd inv_sigma = model.sigma().cwiseInverse();
    const Eigen::MatrixXcd scale = (inv_sigma * inv_sigma.transpose()).cast<cd>();
    projected_.reserve(static_cast<std::size_t>(sy.bins()));
    welch_block_.reserve(static_cast<std::size_t>(sy.bins()));
    for (Eigen::Index f = 0; f < sy.bins(); ++f) {
        projected_.push_back(scale.cwiseProduct(u.transpose() * sy[f] * u));
        const Eigen::MatrixXcd target = v.transpose() * sx[f] * v;
        welch_block_.push_back(target.topLeftCorner(m, m));
        welch_outer_ += target.squaredNorm() - welch_block_.back().squaredNorm();
    }
}

double EmpiricalErrorEvaluator::signal_error(const Eigen::VectorXd& phi) const {
    const Eigen::Index m = model_.sensors();
    if (phi.size() != m) {
        throw ShapeError("signal_error expects M filter factors");
    }
    const Eigen::ArrayXd gain = phi.array() / model_.sigma().array();
    const double kernel = source_energy_.tail(model_.sources() - m).sum();
    const Eigen::ArrayXd in_range = gain.square() * data_energy_.array() - 2.0 * gain * mixed_energy_.array() +
                                    source_energy_.head(m).array();
    return kernel + in_range.sum();
}

double EmpiricalErrorEvaluator::spectrum_error(const Eigen::MatrixXd& pair_factors, SpectrumTarget target) const {
    const Eigen::Index m = model_.sensors();
    if (pair_factors.rows() != m || pair_factors.cols() != m) {
        throw ShapeError("spectrum_error expects an M x M matrix of pair factors");
    }
    const Eigen::MatrixXcd factors = pair_factors.cast<cd>();
    double total = 0.0;
    if (target == SpectrumTarget::population) {
        const Eigen::MatrixXcd ident = Eigen::MatrixXcd::Identity(m, m) * omega2_;
        for (const auto& c : projected_) {
            total += (factors.cwiseProduct(c) - ident).squaredNorm();
        }
        total += static_cast<double>(bins()) * static_cast<double>(model_.sources() - m) * omega2_ * omega2_;
        return total;
    }
    for (std::size_t f = 0; f < projected_.size(); ++f) {
        total += (factors.cwiseProduct(projected_[f]) - welch_block_[f]).squaredNorm();
    }
    return total + welch_outer_;
}

double EmpiricalErrorEvaluator::signal_error(const FilterSpec& filter) const {
    return signal_error(filter_factors(model_, filter));
}

double EmpiricalErrorEvaluator::spectrum_error(const FilterSpec& filter, SpectrumTarget target) const {
    return spectrum_error(pair_filter_factors(model_, filter, Approach::two_step), target);
}

Realization simulate_realization(const ForwardModel& model,
                                 double omega2,
                                 double alpha2,
                                 Eigen::Index samples,
                                 std::uint64_t seed,
                                 std::uint64_t index) {
    if (!(omega2 > 0.0) || alpha2 < 0.0 || samples < 1) {
        throw InvalidSpec("realization needs omega2 > 0, alpha2 >= 0 and samples >= 1");
    }
    Realization out;
    GaussianSource source(child_seed(seed, 2 * index));
    out.x = source.matrix(model.sources(), samples, std::sqrt(omega2));
    if (alpha2 > 0.0) {
        GaussianSource noise(child_seed(seed, 2 * index + 1));
        out.n = noise.matrix(model.sensors(), samples, std::sqrt(alpha2));
    } else {
        out.n = Eigen::MatrixXd::Zero(model.sensors(), samples);
    }
    return out;
}

namespace {

FilterSpec make_filter(Method method, double lambda) {
    return method == Method::tsvd ? FilterSpec::tsvd(lambda) : FilterSpec::tikhonov(lambda);
}

// Argmin of `values` on `grid`, refined by golden-section search for Tikhonov.
double locate_minimum(Method method,
                      const std::vector<double>& grid,
                      const std::vector<double>& values,
                      const std::function<double(double)>& eval,
                      double rel_tol) {
    ErrorCurve probe{method, ErrorKind::signal, ErrorSource::empirical, grid, values};
    const std::size_t k = probe.argmin();
    if (method == Method::tsvd || k + 1 == grid.size()) {
        return grid[k];
    }
    const double lower = k == 0 ? 0.0 : grid[k - 1];
    const Optimum opt = golden_section(eval, lower, grid[k + 1], rel_tol);
    return opt.value < values[k] ? opt.lambda : grid[k];
}

} // namespace

EmpiricalCurves empirical_curves(const std::vector<EmpiricalErrorEvaluator>& evaluators,
                                 Method method,
                                 const std::vector<double>& lambdas,
                                 const ForwardModel& model,
                                 SpectrumTarget target,
                                 double rel_tol) {
    if (evaluators.empty()) {
        throw InvalidParameter("empirical curves need at least one replication");
    }
    const std::size_t reps = evaluators.size();
    const std::size_t points = lambdas.size();
    std::vector<std::vector<double>> sig(reps, std::vector<double>(points));
    std::vector<std::vector<double>> spec(reps, std::vector<double>(points));
    for (std::size_t k = 0; k < points; ++k) {
        const FilterSpec filter = make_filter(method, lambdas[k]);
        const Eigen::VectorXd phi = filter_factors(model, filter);
        const Eigen::MatrixXd pairs = phi * phi.transpose();
        for (std::size_t r = 0; r < reps; ++r) {
            sig[r][k] = evaluators[r].signal_error(phi);
            spec[r][k] = evaluators[r].spectrum_error(pairs, target);
        }
    }

    EmpiricalCurves out{{method, ErrorKind::signal, ErrorSource::empirical, lambdas, std::vector<double>(points, 0.0)},
                        {method, ErrorKind::spectrum, ErrorSource::empirical, lambdas, std::vector<double>(points, 0.0)},
                        0.0,
                        0.0,
                        {},
                        {}};
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t k = 0; k < points; ++k) {
            out.signal.values[k] += sig[r][k] / static_cast<double>(reps);
            out.spectrum.values[k] += spec[r][k] / static_cast<double>(reps);
        }
    }
    out.signal.validate();
    out.spectrum.validate();

    auto signal_at = [&](const EmpiricalErrorEvaluator& e) {
        return [&e, &model, method](double l) { return e.signal_error(filter_factors(model, make_filter(method, l))); };
    };
    auto spectrum_at = [&](const EmpiricalErrorEvaluator& e) {
        return [&e, &model, method, target](double l) {
            return e.spectrum_error(pair_filter_factors(model, make_filter(method, l), Approach::two_step), target);
        };
    };

    for (std::size_t r = 0; r < reps; ++r) {
        out.replication_signal_argmin.push_back(
            locate_minimum(method, lambdas, sig[r], signal_at(evaluators[r]), rel_tol));
        out.replication_spectrum_argmin.push_back(
            locate_minimum(method, lambdas, spec[r], spectrum_at(evaluators[r]), rel_tol));
    }

    auto averaged = [&](auto per_rep) {
        return [&, per_rep](double l) {
            double total = 0.0;
            for (const auto& e : evaluators) {
                total += per_rep(e)(l);
            }
            return total / static_cast<double>(reps);
        };
    };
    out.signal_optimum = locate_minimum(method, lambdas, out.signal.values, averaged(signal_at), rel_tol);
    out.spectrum_optimum = locate_minimum(method, lambdas, out.spectrum.values, averaged(spectrum_at), rel_tol);
    return out;
}

} // namespace crossreg
