#include <gtest/gtest.h>

#include "crossreg/errors.hpp"
#include "crossreg/monte_carlo.hpp"
#include "crossreg/regularizers.hpp"
#include "crossreg/theorems.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace crossreg;

namespace {

ForwardModel small_model(std::uint64_t seed = 3) {
    return synthesize(SyntheticSpec{4, 6, {}, GeometricDecay{2.0, 0.6}, seed});
}

} // namespace

TEST(Realization, DeterministicAndIndexed) {
    const auto model = small_model();
    const auto a = simulate_realization(model, 1.0, 0.5, 128, 9, 0);
    const auto b = simulate_realization(model, 1.0, 0.5, 128, 9, 0);
    const auto c = simulate_realization(model, 1.0, 0.5, 128, 9, 1);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.n, b.n);
    EXPECT_NE(a.x, c.x);
    EXPECT_EQ(a.x.rows(), 6);
    EXPECT_EQ(a.n.rows(), 4);
    const auto quiet = simulate_realization(model, 1.0, 0.0, 64, 9, 0);
    EXPECT_EQ(quiet.n, Eigen::MatrixXd::Zero(4, 64));
}

TEST(Evaluator, SignalMatchesDirectPath) {
    const auto model = small_model();
    const auto r = simulate_realization(model, 1.0, 0.7, 512, 1, 0);
    const EmpiricalErrorEvaluator ev(model, r.x, r.n, WelchConfig{32, 0.5, Window::hann}, 1.0);
    const TimeSeriesEnsemble y = forward_measure(model, TimeSeriesEnsemble(r.x, SeriesLabel::source),
                                                 TimeSeriesEnsemble(r.n, SeriesLabel::noise));
    for (const FilterSpec f : {FilterSpec::tsvd(1), FilterSpec::tsvd(4), FilterSpec::tikhonov(0.0),
                               FilterSpec::tikhonov(0.2), FilterSpec::tikhonov(30.0)}) {
        const double direct = empirical_error_x(r.x, reconstruct(model, f, y).data());
        EXPECT_NEAR(ev.signal_error(f), direct, 1e-9 * direct);
    }
}

TEST(Evaluator, SpectrumMatchesDirectPath) {
    const auto model = small_model();
    const double omega2 = 1.5;
    const auto r = simulate_realization(model, omega2, 0.7, 600, 2, 0);
    const WelchConfig cfg{40, 0.5, Window::hann};
    const EmpiricalErrorEvaluator ev(model, r.x, r.n, cfg, omega2);
    EXPECT_EQ(ev.bins(), 40);
    EXPECT_EQ(ev.samples(), 600);
    const TimeSeriesEnsemble y = forward_measure(model, TimeSeriesEnsemble(r.x, SeriesLabel::source),
                                                 TimeSeriesEnsemble(r.n, SeriesLabel::noise));
    const auto welch_x = welch_cross_spectrum(r.x, cfg);
    const auto population = theoretical_white_spectrum(6, omega2, 40);
    for (const FilterSpec f : {FilterSpec::tsvd(2), FilterSpec::tsvd(4), FilterSpec::tikhonov(0.05),
                               FilterSpec::tikhonov(1.0)}) {
        const auto s = two_step_cross_spectrum(model, f, y, cfg);
        const double vs_welch = empirical_error_s(s, welch_x);
        const double vs_pop = empirical_error_s(s, population);
        EXPECT_NEAR(ev.spectrum_error(f, SpectrumTarget::welch), vs_welch, 1e-9 * vs_welch);
        EXPECT_NEAR(ev.spectrum_error(f, SpectrumTarget::population), vs_pop, 1e-9 * vs_pop);
    }
}

TEST(Evaluator, PairFactorOverloadMatchesFilter) {
    const auto model = small_model();
    const auto r = simulate_realization(model, 1.0, 0.3, 256, 3, 0);
    const EmpiricalErrorEvaluator ev(model, r.x, r.n, WelchConfig{32, 0.5, Window::hann}, 1.0);
    const FilterSpec f = FilterSpec::tikhonov(0.4);
    const Eigen::VectorXd phi = filter_factors(model, f);
    EXPECT_DOUBLE_EQ(ev.signal_error(phi), ev.signal_error(f));
    EXPECT_DOUBLE_EQ(ev.spectrum_error(Eigen::MatrixXd(phi * phi.transpose()), SpectrumTarget::population),
                     ev.spectrum_error(f, SpectrumTarget::population));
}

TEST(EmpiricalCurves, ShapesAndArgmins) {
    const auto model = small_model();
    std::vector<EmpiricalErrorEvaluator> evs;
    for (std::uint64_t k = 0; k < 3; ++k) {
        const auto r = simulate_realization(model, 1.0, 0.5, 2048, 4, k);
        evs.emplace_back(model, r.x, r.n, WelchConfig{64, 0.5, Window::hann}, 1.0);
    }
    const std::vector<double> grid{1, 2, 3, 4};
    const auto c = empirical_curves(evs, Method::tsvd, grid, model, SpectrumTarget::population, 1e-6);
    EXPECT_EQ(c.signal.lambdas, grid);
    EXPECT_EQ(c.spectrum.lambdas, grid);
    EXPECT_EQ(c.replication_signal_argmin.size(), 3u);
    EXPECT_EQ(c.signal_optimum, c.signal.argmin_lambda());
    EXPECT_EQ(c.signal.source, ErrorSource::empirical);

    const auto grid_t = tikhonov_grid(0.5, SearchConfig{});
    const auto t = empirical_curves(evs, Method::tikhonov, grid_t, model, SpectrumTarget::welch, 1e-6);
    EXPECT_NEAR(t.signal_optimum, 0.5, 0.25);
    EXPECT_LT(t.spectrum_optimum, t.signal_optimum);
    for (double v : t.signal.values) EXPECT_GE(v, t.signal.min_value());
}

TEST(Theorems, RmsRelativeGap) {
    const ErrorCurve a{Method::tsvd, ErrorKind::signal, ErrorSource::empirical, {1, 2}, {1.1, 1.8}};
    const ErrorCurve b{Method::tsvd, ErrorKind::signal, ErrorSource::analytic_white_closed_form, {1, 2}, {1.0, 2.0}};
    EXPECT_NEAR(rms_relative_gap(a, b), 0.1, 1e-12);
    const ErrorCurve c{Method::tsvd, ErrorKind::signal, ErrorSource::empirical, {1, 3}, {1.0, 2.0}};
    EXPECT_THROW(rms_relative_gap(c, b), InvalidParameter);
}

TEST(Theorems, ClosedFormCheckPasses) {
    const auto model = synthesize(SyntheticSpec{20, 25, {}, GeometricDecay{1.0, 0.7}, 0});
    const auto c = check_closed_form(model, 1.0, 1.0, SearchConfig{});
    EXPECT_TRUE(c.passed());
    EXPECT_LE(c.tikhonov_x_rel_error, 1e-6);
    EXPECT_LT(c.tikhonov_ratio, 0.5);
    EXPECT_GE(c.tikhonov_lambda_s, c.h_lower - interval_slack);
    EXPECT_LE(c.tikhonov_lambda_s, c.h_upper + interval_slack);
}

TEST(Theorems, DegenerateNoNoise) {
    const auto model = small_model();
    const auto c = check_closed_form(model, 1.0, 0.0, SearchConfig{});
    EXPECT_TRUE(c.degenerate);
    EXPECT_TRUE(c.passed());
    EXPECT_EQ(c.tsvd_formula, 4);
    EXPECT_EQ(c.h_lower, 0.0);
    EXPECT_EQ(c.h_upper, 0.0);
}

TEST(Theorems, MonteCarloReportSmall) {
    WhiteNoiseScenario s{small_model(), 1.0, 1.0, 1 << 12, WelchConfig{64, 0.5, Window::hann}, 5, 3, SearchConfig{}};
    const auto checks = check_monte_carlo(s);
    ASSERT_EQ(checks.size(), 2u);
    EXPECT_EQ(checks[0].target, SpectrumTarget::population);
    EXPECT_EQ(checks[1].target, SpectrumTarget::welch);
    for (const auto& c : checks) {
        EXPECT_EQ(c.replications, 3);
        EXPECT_GT(c.tikhonov_lambda_x, 0.0);
        EXPECT_GE(c.tsvd_agreement_rate, 0.0);
        EXPECT_LE(c.tsvd_agreement_rate, 1.0);
        EXPECT_LT(c.tikhonov_signal_rms, 0.2);
    }
    const auto report = verify_theorems(s);
    const auto j = to_json(report);
    EXPECT_TRUE(j.contains("closed_form"));
    EXPECT_EQ(j["monte_carlo"].size(), 2u);
}

TEST(Theorems, ScenarioValidation) {
    WhiteNoiseScenario s{small_model(), 0.0, 1.0, 1024, WelchConfig{}, 0, 2, SearchConfig{}};
    EXPECT_THROW(s.validate(), ConfigError);
    s.omega2 = 1.0;
    s.alpha2 = -1.0;
    EXPECT_THROW(s.validate(), ConfigError);
    s.alpha2 = 1.0;
    s.samples = 100;
    EXPECT_THROW(s.validate(), ConfigError);
    s.replications = 0;
    EXPECT_NO_THROW(s.validate());
    EXPECT_TRUE(check_monte_carlo(s).empty());
}
