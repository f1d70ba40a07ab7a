#include "crossreg/error_analysis.hpp"

#include "crossreg/errors.hpp"
#include "crossreg/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace crossreg {

using cd = std::complex<double>;

double empirical_error_x(const Eigen::MatrixXd& x_true, const Eigen::MatrixXd& x_rec) {
    if (x_true.rows() != x_rec.rows() || x_true.cols() != x_rec.cols()) {
        throw ShapeError("empirical_error_x: shapes differ");
    }
    return (x_rec - x_true).squaredNorm();
}

double empirical_error_x(const TimeSeriesEnsemble& x_true, const TimeSeriesEnsemble& x_rec) {
    return empirical_error_x(x_true.data(), x_rec.data());
}

double empirical_error_s(const CrossSpectrum& s_est, const CrossSpectrum& s_true) {
    if (s_est.rows() != s_true.rows() || s_est.cols() != s_true.cols() || s_est.bins() != s_true.bins()) {
        throw ShapeError("empirical_error_s: spectra differ in shape or frequency grid");
    }
    double total = 0.0;
    for (Eigen::Index f = 0; f < s_est.bins(); ++f) {
        total += (s_est[f] - s_true[f]).squaredNorm();
    }
    return total;
}

SignalErrorTerms analytic_error_x_filterform(const ForwardModel& model,
                                             const FilterSpec& filter,
                                             const Eigen::MatrixXd& x,
                                             const Eigen::MatrixXd& n) {
    const Eigen::Index m = model.sensors();
    const Eigen::Index nn = model.sources();
    if (x.rows() != nn || n.rows() != m || x.cols() != n.cols()) {
        throw ShapeError("analytic_error_x_filterform: expected x (N x T) and n (M x T)");
    }
    const Eigen::VectorXd phi = filter_factors(model, filter);
    const Eigen::MatrixXd p = model.v().transpose() * x;
    const Eigen::MatrixXd q = model.u().transpose() * n;

    SignalErrorTerms terms;
    for (Eigen::Index i = 0; i < nn; ++i) {
        const double source = p.row(i).squaredNorm();
        if (i >= m) {
            terms.null_space += source;
            continue;
        }
        const double gain = phi(i) / model.sigma()(i);
        terms.regularization += (phi(i) - 1.0) * (phi(i) - 1.0) * source;
        terms.perturbation += gain * gain * q.row(i).squaredNorm();
        terms.cross += 2.0 * (phi(i) - 1.0) * gain * p.row(i).dot(q.row(i));
    }
    return terms;
}

SpectrumErrorTerms analytic_error_s_filterform(const ForwardModel& model,
                                               const FilterSpec& filter,
                                               const CrossSpectrum& sx,
                                               const CrossSpectrum& sn,
                                               const std::optional<CrossSpectrum>& sxn) {
    const Eigen::Index m = model.sensors();
    const Eigen::Index nn = model.sources();
    if (sx.rows() != nn || sx.cols() != nn || sn.rows() != m || sn.cols() != m || sx.bins() != sn.bins()) {
        throw ShapeError("analytic_error_s_filterform: expected S^x (N x N) and S^n (M x M) on one grid");
    }
    if (sxn && (sxn->rows() != nn || sxn->cols() != m || sxn->bins() != sx.bins())) {
        throw ShapeError("analytic_error_s_filterform: expected S^xn (N x M) on the same grid");
    }
    const Eigen::VectorXd phi = filter_factors(model, filter);
    const Eigen::VectorXd& sigma = model.sigma();
    const Eigen::MatrixXcd v = model.v().cast<cd>();
    const Eigen::MatrixXcd v1 = model.v_range().cast<cd>();
    const Eigen::MatrixXcd u = model.u().cast<cd>();

    SpectrumErrorTerms terms;
    Eigen::MatrixXcd k;
    for (Eigen::Index f = 0; f < sx.bins(); ++f) {
        const Eigen::MatrixXcd a = v.transpose() * sx[f] * v;
        const Eigen::MatrixXcd b = u.transpose() * sn[f] * u;
        if (sxn) {
            k = v1.transpose() * (*sxn)[f] * u;
        }
        for (Eigen::Index c = 0; c < nn; ++c) {
            for (Eigen::Index r = 0; r < nn; ++r) {
                if (r >= m || c >= m) {
                    terms.null_space += std::norm(a(r, c));
                    continue;
                }
                const double p = phi(r) * phi(c);
                const double gain = p / (sigma(r) * sigma(c));
                terms.regularization += (p - 1.0) * (p - 1.0) * std::norm(a(r, c));
                terms.perturbation += gain * gain * std::norm(b(r, c));
                terms.mixed += 2.0 * (p - 1.0) * gain * (std::conj(a(r, c)) * b(r, c)).real();
                if (sxn) {
                    const cd cross = p * (k(r, c) / sigma(c) + std::conj(k(c, r)) / sigma(r));
                    const cd rest = (p - 1.0) * a(r, c) + gain * b(r, c);
                    terms.cross += std::norm(cross) + 2.0 * (std::conj(rest) * cross).real();
                }
            }
        }
    }
    return terms;
}

namespace {

// sigma^2 / (sigma^2 + lambda) and lambda / (sigma^2 + lambda), finite at lambda = inf.
double tikhonov_factor(double s2, double lambda) {
    return std::isinf(lambda) ? 0.0 : s2 / (s2 + lambda);
}

double tikhonov_reject(double s2, double lambda) {
    return std::isinf(lambda) ? 1.0 : lambda / (s2 + lambda);
}

} // namespace

WhiteErrorTerms closed_form_error_x_white(const ForwardModel& model,
                                          const FilterSpec& filter,
                                          double omega2,
                                          double alpha2,
                                          double samples) {
    const Eigen::Index m = model.sensors();
    const Eigen::Index nn = model.sources();
    const Eigen::VectorXd s2 = model.sigma().array().square();
    WhiteErrorTerms terms;
    if (filter.method() == Method::tsvd) {
        const Eigen::Index k = filter.retained(m);
        terms.null_space = samples * static_cast<double>(nn - m) * omega2;
        terms.regularization = samples * static_cast<double>(m - k) * omega2;
        terms.perturbation = samples * alpha2 * s2.head(k).cwiseInverse().sum();
        return terms;
    }
    const double lambda = filter.lambda();
    terms.null_space = samples * static_cast<double>(nn - m) * omega2;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double phi = tikhonov_factor(s2(i), lambda);
        const double reject = tikhonov_reject(s2(i), lambda);
        terms.regularization += samples * omega2 * reject * reject;
        terms.perturbation += samples * alpha2 * phi * phi / s2(i);
    }
    return terms;
}

WhiteErrorTerms closed_form_error_s_white(const ForwardModel& model,
                                          const FilterSpec& filter,
                                          double omega2,
                                          double alpha2,
                                          double bins) {
    const Eigen::Index m = model.sensors();
    const Eigen::Index nn = model.sources();
    const Eigen::VectorXd s2 = model.sigma().array().square();
    const double omega4 = omega2 * omega2;
    const double alpha4 = alpha2 * alpha2;
    WhiteErrorTerms terms;
    terms.null_space = bins * static_cast<double>(nn - m) * omega4;
    if (filter.method() == Method::tsvd) {
        const Eigen::Index k = filter.retained(m);
        terms.regularization = bins * static_cast<double>(m - k) * omega4;
        terms.perturbation = bins * alpha4 * s2.head(k).array().square().inverse().sum();
        return terms;
    }
    const double lambda = filter.lambda();
    for (Eigen::Index i = 0; i < m; ++i) {
        const double phi = tikhonov_factor(s2(i), lambda);
        // g - 1 = phi^2 - 1 = -(1 - phi)(1 + phi), kept exact for small lambda
        const double g1 = -tikhonov_reject(s2(i), lambda) * (1.0 + phi);
        const double q = phi * phi / s2(i);
        terms.regularization += bins * omega4 * g1 * g1;
        terms.perturbation += bins * alpha4 * q * q;
        terms.mixed += 2.0 * bins * omega2 * alpha2 * g1 * q;
    }
    return terms;
}

ErrorDerivatives closed_form_derivatives(const ForwardModel& model,
                                         double lambda,
                                         double omega2,
                                         double alpha2,
                                         double samples,
                                         double bins) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidParameter("derivatives need a finite Tikhonov lambda >= 0");
    }
    if (!(omega2 > 0.0) || alpha2 < 0.0) {
        throw InvalidParameter("derivatives need omega2 > 0 and alpha2 >= 0");
    }
    const Eigen::VectorXd s2 = model.sigma().array().square();
    double sum_x = 0.0;
    double sum_s = 0.0;
    for (Eigen::Index i = 0; i < s2.size(); ++i) {
        const double d = s2(i) + lambda;
        sum_x += s2(i) / (d * d * d);
        const double root = std::sqrt(s2(i) * s2(i) + s2(i) * alpha2 / omega2);
        sum_s += s2(i) / std::pow(d, 5) * (alpha2 + s2(i) * omega2) * (d + root) * (d - root);
    }
    return {2.0 * samples * (omega2 * lambda - alpha2) * sum_x, 4.0 * bins * omega2 * sum_s};
}

double h_function(double z, double omega2, double alpha2) {
    if (alpha2 == 0.0) {
        return 0.0;
    }
    const double z2 = z * z;
    const double extra = z2 * alpha2 / omega2;
    // -z^2 + sqrt(z^4 + e) rewritten as e / (z^2 + sqrt(z^4 + e)) to avoid cancellation
    const double denom = z2 + std::sqrt(z2 * z2 + extra);
    return denom > 0.0 ? extra / denom : 0.0;
}

Eigen::Index tsvd_white_optimum(const ForwardModel& model, double omega2, double alpha2) {
    const Eigen::Index m = model.sensors();
    if (alpha2 == 0.0) {
        return m;
    }
    const double threshold = std::sqrt(alpha2 / omega2);
    Eigen::Index best = 1;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (model.sigma()(i) >= threshold) {
            best = i + 1;
        }
    }
    return best;
}

std::string_view to_string(ErrorKind kind) noexcept {
    return kind == ErrorKind::signal ? "signal" : "spectrum";
}

std::string_view to_string(ErrorSource source) noexcept {
    switch (source) {
    case ErrorSource::empirical: return "empirical";
    case ErrorSource::analytic_filter_form: return "analytic_filter_form";
    case ErrorSource::analytic_white_closed_form: return "analytic_white_closed_form";
    }
    return "unknown";
}

void ErrorCurve::validate() const {
    if (lambdas.empty() || lambdas.size() != values.size()) {
        throw InvalidParameter("error curve needs equally many, and at least one, grid points and values");
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k]) || values[k] < 0.0) {
            throw InvalidParameter("error curve values must be finite and non-negative");
        }
        if (k > 0 && !(lambdas[k] > lambdas[k - 1])) {
            throw InvalidParameter("error curve grid must be strictly increasing");
        }
    }
}

std::size_t ErrorCurve::argmin() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] <= values[best]) {
            best = k;
        }
    }
    return best;
}

ErrorCurve make_curve(Method method,
                      ErrorKind kind,
                      ErrorSource source,
                      std::vector<double> lambdas,
                      const std::function<double(double)>& eval) {
    ErrorCurve curve{method, kind, source, std::move(lambdas), {}};
    curve.values.reserve(curve.lambdas.size());
    for (double l : curve.lambdas) {
        curve.values.push_back(eval(l));
    }
    curve.validate();
    return curve;
}

std::vector<double> tikhonov_grid(double scale, const SearchConfig& search) {
    if (!(scale > 0.0) || search.grid_points < 2 || !(search.lower_ratio > 0.0) ||
        !(search.upper_ratio > search.lower_ratio)) {
        throw InvalidParameter("Tikhonov grid needs scale > 0, >= 2 points and 0 < lower_ratio < upper_ratio");
    }
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(search.grid_points) + 1);
    grid.push_back(0.0);
    const double lo = std::log(search.lower_ratio * scale);
    const double hi = std::log(search.upper_ratio * scale);
    const double step = (hi - lo) / static_cast<double>(search.grid_points - 1);
    for (Eigen::Index k = 0; k < search.grid_points; ++k) {
        grid.push_back(std::exp(lo + step * static_cast<double>(k)));
    }
    return grid;
}

Optimum find_optimal_discrete(const std::function<double(Eigen::Index)>& eval, Eigen::Index count) {
    if (count < 1) {
        throw InvalidParameter("discrete search needs at least one candidate");
    }
    Optimum best{1.0, eval(1), 1.0, 1.0, 0.0};
    for (Eigen::Index k = 2; k <= count; ++k) {
        const double value = eval(k);
        if (value <= best.value) {
            best = {static_cast<double>(k), value, static_cast<double>(k), static_cast<double>(k), 0.0};
        }
    }
    return best;
}

Optimum golden_section(const std::function<double(double)>& eval, double lower, double upper, double rel_tol) {
    constexpr double inv_phi = 0.6180339887498949;
    constexpr int max_iterations = 400;
    double a = lower;
    double b = upper;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    for (int it = 0; it < max_iterations; ++it) {
        const double mid = 0.5 * (a + b);
        if (b - a <= rel_tol * std::max(std::abs(mid), std::numeric_limits<double>::min())) {
            break;
        }
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    const double x = fc <= fd ? c : d;
    return {x, std::min(fc, fd), a, b, b - a};
}

Optimum find_optimal_continuous(const std::function<double(double)>& eval, double scale, const SearchConfig& search) {
    const std::vector<double> grid = tikhonov_grid(scale, search);
    std::vector<double> values(grid.size());
    std::size_t best = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        values[k] = eval(grid[k]);
        if (values[k] < values[best]) {
            best = k;
        }
    }
    if (best + 1 == grid.size()) {
        std::ostringstream msg;
        msg << "no minimum bracketed: the error is still decreasing at lambda = " << grid.back();
        throw NoMinimumBracketed(msg.str());
    }
    const double lower = best == 0 ? 0.0 : grid[best - 1];
    const double upper = grid[best + 1];
    Optimum refined = golden_section(eval, lower, upper, search.rel_tol);
    if (values[best] < refined.value) {
        refined.lambda = grid[best];
        refined.value = values[best];
    }
    return refined;
}

void write_csv(std::ostream& out, const std::vector<ErrorCurve>& curves) {
    out << "method,kind,source,lambda,epsilon\n";
    char buf[64];
    for (const auto& c : curves) {
        for (std::size_t k = 0; k < c.lambdas.size(); ++k) {
            out << to_string(c.method) << ',' << to_string(c.kind) << ',' << to_string(c.source) << ',';
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.lambdas[k], c.values[k]);
            out << buf;
        }
    }
}

} // namespace crossreg
