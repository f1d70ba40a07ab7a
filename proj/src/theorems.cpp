#include "crossreg/theorems.hpp"

#include "crossreg/errors.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace crossreg {

namespace {

// Golden-section search stalls on roundoff near flat minima. Where the
// derivative changes sign around the estimate, bisect on that sign instead.
double polish_by_derivative(const std::function<double(double)>& derivative, double estimate) {
    double lo = 0.5 * estimate;
    double hi = 2.0 * estimate;
    if (!(derivative(lo) < 0.0 && derivative(hi) > 0.0)) {
        return estimate;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (derivative(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

void WhiteNoiseScenario::validate() const {
    if (!(omega2 > 0.0) || !std::isfinite(omega2)) {
        throw ConfigError("omega2 must be positive and finite");
    }
    if (!(alpha2 >= 0.0) || !std::isfinite(alpha2)) {
        throw ConfigError("alpha2 must be non-negative and finite");
    }
    if (replications < 0) {
        throw ConfigError("replications must be >= 0");
    }
    if (replications > 0) {
        if (samples < 1) {
            throw ConfigError("samples must be >= 1");
        }
        welch.validate(samples);
    }
    if (search.grid_points < 2 || !(search.rel_tol > 0.0) || !(search.lower_ratio > 0.0) ||
        !(search.upper_ratio > search.lower_ratio)) {
        throw ConfigError("search settings are out of range");
    }
}

ClosedFormCheck check_closed_form(const ForwardModel& model,
                                  double omega2,
                                  double alpha2,
                                  const SearchConfig& search) {
    ClosedFormCheck c;
    c.sensors = model.sensors();
    c.sources = model.sources();
    c.omega2 = omega2;
    c.alpha2 = alpha2;
    c.degenerate = alpha2 == 0.0;

    const Eigen::Index m = model.sensors();
    c.tsvd_lambda_x = static_cast<Eigen::Index>(find_optimal_discrete(
        [&](Eigen::Index k) {
            return closed_form_error_x_white(model, FilterSpec::tsvd(static_cast<double>(k)), omega2, alpha2, 1.0).total();
        },
        m).lambda);
    c.tsvd_lambda_s = static_cast<Eigen::Index>(find_optimal_discrete(
        [&](Eigen::Index k) {
            return closed_form_error_s_white(model, FilterSpec::tsvd(static_cast<double>(k)), omega2, alpha2, 1.0).total();
        },
        m).lambda);
    c.tsvd_formula = tsvd_white_optimum(model, omega2, alpha2);
    c.tsvd_equal = c.tsvd_lambda_x == c.tsvd_lambda_s && c.tsvd_lambda_s == c.tsvd_formula;

    c.tikhonov_expected_x = alpha2 / omega2;
    c.h_lower = h_function(model.sigma()(m - 1), omega2, alpha2);
    c.h_upper = h_function(model.sigma()(0), omega2, alpha2);

    if (c.degenerate) {
        // Both Tikhonov errors are increasing from lambda = 0 when there is no noise.
        const auto d = closed_form_derivatives(model, 0.0, omega2, alpha2);
        c.tikhonov_x_ok = d.signal >= 0.0;
        c.tikhonov_half_ok = d.spectrum >= 0.0;
        c.interval_ok = true;
        return c;
    }

    const double scale = c.tikhonov_expected_x;
    const Optimum ox = find_optimal_continuous(
        [&](double l) { return closed_form_error_x_white(model, FilterSpec::tikhonov(l), omega2, alpha2, 1.0).total(); },
        scale, search);
    const Optimum os = find_optimal_continuous(
        [&](double l) { return closed_form_error_s_white(model, FilterSpec::tikhonov(l), omega2, alpha2, 1.0).total(); },
        scale, search);
    const double lx = polish_by_derivative(
        [&](double l) { return closed_form_derivatives(model, l, omega2, alpha2).signal; }, ox.lambda);
    const double ls = polish_by_derivative(
        [&](double l) { return closed_form_derivatives(model, l, omega2, alpha2).spectrum; }, os.lambda);
    c.tikhonov_lambda_x = lx;
    c.tikhonov_lambda_s = ls;
    c.tikhonov_x_rel_error = std::abs(lx - scale) / scale;
    c.tikhonov_x_ok = c.tikhonov_x_rel_error <= search.rel_tol;
    c.tikhonov_ratio = ls / lx;
    c.tikhonov_half_ok = ls < 0.5 * lx;
    c.interval_ok = ls >= c.h_lower - interval_slack && ls <= c.h_upper + interval_slack;
    return c;
}

double rms_relative_gap(const ErrorCurve& empirical, const ErrorCurve& analytic) {
    if (empirical.lambdas != analytic.lambdas) {
        throw InvalidParameter("curves must share a grid");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < empirical.values.size(); ++k) {
        if (analytic.values[k] > 0.0) {
            const double rel = (empirical.values[k] - analytic.values[k]) / analytic.values[k];
            sum += rel * rel;
            ++count;
        }
    }
    return count ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

namespace {

ErrorCurve closed_curve(const WhiteNoiseScenario& s, Method method, ErrorKind kind, const std::vector<double>& grid) {
    const double samples = static_cast<double>(s.samples);
    const double bins = static_cast<double>(s.welch.segment_length);
    return make_curve(method, kind, ErrorSource::analytic_white_closed_form, grid, [&](double l) {
        const FilterSpec filter = method == Method::tsvd ? FilterSpec::tsvd(l) : FilterSpec::tikhonov(l);
        return kind == ErrorKind::signal
                   ? closed_form_error_x_white(s.model, filter, s.omega2, s.alpha2, samples).total()
                   : closed_form_error_s_white(s.model, filter, s.omega2, s.alpha2, bins).total();
    });
}

std::vector<double> tsvd_grid(Eigen::Index m) {
    std::vector<double> grid;
    for (Eigen::Index k = 1; k <= m; ++k) {
        grid.push_back(static_cast<double>(k));
    }
    return grid;
}

} // namespace

std::vector<MonteCarloCheck> check_monte_carlo(const WhiteNoiseScenario& scenario) {
    scenario.validate();
    if (scenario.replications == 0) {
        return {};
    }
    std::vector<EmpiricalErrorEvaluator> evaluators;
    evaluators.reserve(static_cast<std::size_t>(scenario.replications));
    for (Eigen::Index r = 0; r < scenario.replications; ++r) {
        const Realization real = simulate_realization(scenario.model, scenario.omega2, scenario.alpha2,
                                                      scenario.samples, scenario.seed, static_cast<std::uint64_t>(r));
        evaluators.emplace_back(scenario.model, real.x, real.n, scenario.welch, scenario.omega2);
    }

    const double scale = scenario.alpha2 > 0.0 ? scenario.alpha2 / scenario.omega2 : 1.0;
    const std::vector<double> tik_grid = tikhonov_grid(scale, scenario.search);
    const std::vector<double> svd_grid = tsvd_grid(scenario.model.sensors());
    const ErrorCurve tik_x = closed_curve(scenario, Method::tikhonov, ErrorKind::signal, tik_grid);
    const ErrorCurve tik_s = closed_curve(scenario, Method::tikhonov, ErrorKind::spectrum, tik_grid);
    const ErrorCurve svd_x = closed_curve(scenario, Method::tsvd, ErrorKind::signal, svd_grid);
    const ErrorCurve svd_s = closed_curve(scenario, Method::tsvd, ErrorKind::spectrum, svd_grid);

    std::vector<MonteCarloCheck> out;
    for (SpectrumTarget target : {SpectrumTarget::population, SpectrumTarget::welch}) {
        MonteCarloCheck c;
        c.replications = scenario.replications;
        c.samples = scenario.samples;
        c.target = target;

        const EmpiricalCurves tik = empirical_curves(evaluators, Method::tikhonov, tik_grid, scenario.model, target,
                                                     scenario.search.rel_tol);
        c.tikhonov_lambda_x = tik.signal_optimum;
        c.tikhonov_lambda_x_rel_error = scenario.alpha2 > 0.0
                                            ? std::abs(tik.signal_optimum - scale) / scale
                                            : std::abs(tik.signal_optimum);
        c.tikhonov_lambda_s = tik.spectrum_optimum;
        c.tikhonov_signal_rms = rms_relative_gap(tik.signal, tik_x);
        c.tikhonov_spectrum_rms = rms_relative_gap(tik.spectrum, tik_s);
        std::size_t below = 0;
        std::size_t below_half = 0;
        for (std::size_t r = 0; r < tik.replication_signal_argmin.size(); ++r) {
            below += tik.replication_spectrum_argmin[r] < tik.replication_signal_argmin[r];
            below_half += tik.replication_spectrum_argmin[r] < 0.5 * tik.replication_signal_argmin[r];
        }
        const double reps = static_cast<double>(scenario.replications);
        c.tikhonov_s_below_x_rate = static_cast<double>(below) / reps;
        c.tikhonov_s_below_half_x_rate = static_cast<double>(below_half) / reps;

        const EmpiricalCurves svd = empirical_curves(evaluators, Method::tsvd, svd_grid, scenario.model, target,
                                                     scenario.search.rel_tol);
        c.tsvd_lambda_x = static_cast<Eigen::Index>(svd.signal_optimum);
        c.tsvd_lambda_s = static_cast<Eigen::Index>(svd.spectrum_optimum);
        std::size_t agree = 0;
        for (std::size_t r = 0; r < svd.replication_signal_argmin.size(); ++r) {
            agree += svd.replication_signal_argmin[r] == svd.replication_spectrum_argmin[r];
        }
        c.tsvd_agreement_rate = static_cast<double>(agree) / reps;
        c.tsvd_signal_rms = rms_relative_gap(svd.signal, svd_x);
        c.tsvd_spectrum_rms = rms_relative_gap(svd.spectrum, svd_s);
        out.push_back(c);
    }
    return out;
}

TheoremReport verify_theorems(const WhiteNoiseScenario& scenario) {
    scenario.validate();
    TheoremReport report;
    report.closed_form = check_closed_form(scenario.model, scenario.omega2, scenario.alpha2, scenario.search);
    report.monte_carlo = check_monte_carlo(scenario);
    return report;
}

nlohmann::json to_json(const ClosedFormCheck& c) {
    return {
        {"sensors", c.sensors},
        {"sources", c.sources},
        {"omega2", c.omega2},
        {"alpha2", c.alpha2},
        {"degenerate_no_noise", c.degenerate},
        {"tsvd", {{"lambda_x", c.tsvd_lambda_x}, {"lambda_s", c.tsvd_lambda_s}, {"formula", c.tsvd_formula},
                  {"equal", c.tsvd_equal}}},
        {"tikhonov",
         {{"lambda_x", c.tikhonov_lambda_x},
          {"expected_lambda_x", c.tikhonov_expected_x},
          {"lambda_x_rel_error", c.tikhonov_x_rel_error},
          {"lambda_x_ok", c.tikhonov_x_ok},
          {"lambda_s", c.tikhonov_lambda_s},
          {"ratio_s_over_x", c.tikhonov_ratio},
          {"below_half_ok", c.tikhonov_half_ok},
          {"h_lower", c.h_lower},
          {"h_upper", c.h_upper},
          {"interval_ok", c.interval_ok}}},
        {"passed", c.passed()},
    };
}

nlohmann::json to_json(const MonteCarloCheck& c) {
    return {
        {"replications", c.replications},
        {"samples", c.samples},
        {"target", std::string(to_string(c.target))},
        {"tikhonov",
         {{"lambda_x", c.tikhonov_lambda_x},
          {"lambda_x_rel_error", c.tikhonov_lambda_x_rel_error},
          {"lambda_s", c.tikhonov_lambda_s},
          {"signal_curve_rms_rel_gap", c.tikhonov_signal_rms},
          {"spectrum_curve_rms_rel_gap", c.tikhonov_spectrum_rms},
          {"rate_lambda_s_below_lambda_x", c.tikhonov_s_below_x_rate},
          {"rate_lambda_s_below_half_lambda_x", c.tikhonov_s_below_half_x_rate}}},
        {"tsvd",
         {{"lambda_x", c.tsvd_lambda_x},
          {"lambda_s", c.tsvd_lambda_s},
          {"argmin_agreement_rate", c.tsvd_agreement_rate},
          {"signal_curve_rms_rel_gap", c.tsvd_signal_rms},
          {"spectrum_curve_rms_rel_gap", c.tsvd_spectrum_rms}}},
    };
}

nlohmann::json to_json(const TheoremReport& report) {
    nlohmann::json mc = nlohmann::json::array();
    for (const auto& c : report.monte_carlo) {
        mc.push_back(to_json(c));
    }
    return {{"closed_form", to_json(report.closed_form)},
            {"monte_carlo", mc},
            {"closed_form_passed", report.closed_form_passed()}};
}

} // namespace crossreg
