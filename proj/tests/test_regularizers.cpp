#include <gtest/gtest.h>

#include "crossreg/errors.hpp"
#include "crossreg/regularizers.hpp"
#include "oracles.hpp"

#include <cmath>
#include <sstream>

using namespace crossreg;

namespace {

ForwardModel model_with(std::vector<double> sigma, Eigen::Index sources, std::uint64_t seed = 0) {
    const auto m = static_cast<Eigen::Index>(sigma.size());
    return synthesize(SyntheticSpec{m, sources, std::move(sigma), std::nullopt, seed});
}

ForwardModel random_model(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return ForwardModel::decompose(oracle::gaussian(m, n, rng));
}

TimeSeriesEnsemble measure(const ForwardModel& model, Eigen::Index samples, std::uint64_t seed, double noise = 0.5) {
    std::mt19937_64 rng(seed);
    const TimeSeriesEnsemble x(oracle::gaussian(model.sources(), samples, rng), SeriesLabel::source);
    const TimeSeriesEnsemble n(noise * oracle::gaussian(model.sensors(), samples, rng), SeriesLabel::noise);
    return forward_measure(model, x, n);
}

} // namespace

TEST(FilterFactors, TikhonovZeroIsOne) {
    const auto model = random_model(4, 5, 1);
    EXPECT_EQ(filter_factors(model, FilterSpec::tikhonov(0.0)), Eigen::VectorXd::Ones(4));
}

TEST(FilterFactors, TikhonovHandValues) {
    const auto model = model_with({2.0, 1.0}, 2);
    const Eigen::VectorXd phi = filter_factors(model, FilterSpec::tikhonov(1.0));
    EXPECT_NEAR(phi(0), 0.8, 1e-15);
    EXPECT_NEAR(phi(1), 0.5, 1e-15);
}

TEST(FilterFactors, TsvdStep) {
    const auto model = model_with({3.0, 2.0, 1.0}, 4);
    EXPECT_EQ(filter_factors(model, FilterSpec::tsvd(1)), Eigen::Vector3d(1, 0, 0));
    EXPECT_EQ(filter_factors(model, FilterSpec::tsvd(2)), Eigen::Vector3d(1, 1, 0));
    EXPECT_EQ(filter_factors(model, FilterSpec::tsvd(3)), Eigen::Vector3d(1, 1, 1));
}

TEST(FilterFactors, InvalidParameters) {
    const auto model = model_with({3.0, 2.0, 1.0}, 4);
    EXPECT_THROW(filter_factors(model, FilterSpec::tsvd(4)), InvalidParameter);
    EXPECT_THROW(filter_factors(model, FilterSpec::tsvd(2.5)), InvalidParameter);
    EXPECT_THROW(FilterSpec::tsvd(0), InvalidParameter);
    EXPECT_THROW(FilterSpec::tikhonov(std::nan("")), InvalidParameter);
    EXPECT_THROW(parse_method("lasso"), InvalidParameter);
    EXPECT_EQ(parse_method("tikhonov"), Method::tikhonov);
}

TEST(FilterFactors, RangeProperties) {
    const auto model = random_model(6, 8, 2);
    for (double lambda : {1e-6, 0.01, 1.0, 100.0}) {
        const Eigen::VectorXd phi = filter_factors(model, FilterSpec::tikhonov(lambda));
        EXPECT_GT(phi.minCoeff(), 0.0);
        EXPECT_LE(phi.maxCoeff(), 1.0);
    }
    for (int k = 1; k <= 6; ++k) {
        const Eigen::VectorXd phi = filter_factors(model, FilterSpec::tsvd(k));
        for (Eigen::Index i = 0; i < 6; ++i) EXPECT_TRUE(phi(i) == 0.0 || phi(i) == 1.0);
    }
}

TEST(PairFactors, HandValuesOneAndTwoStep) {
    const auto model = model_with({2.0, 1.0}, 3);
    const Eigen::MatrixXd one = pair_filter_factors(model, FilterSpec::tikhonov(1.0), Approach::one_step);
    const Eigen::MatrixXd two = pair_filter_factors(model, FilterSpec::tikhonov(1.0), Approach::two_step);
    EXPECT_NEAR(one(0, 0), 16.0 / 17.0, 1e-15);
    EXPECT_NEAR(one(0, 1), 0.8, 1e-15);
    EXPECT_NEAR(one(1, 0), 0.8, 1e-15);
    EXPECT_NEAR(one(1, 1), 0.5, 1e-15);
    EXPECT_NEAR(two(0, 0), 0.64, 1e-15);
    EXPECT_NEAR(two(0, 1), 0.40, 1e-15);
    EXPECT_NEAR(two(1, 0), 0.40, 1e-15);
    EXPECT_NEAR(two(1, 1), 0.25, 1e-15);
}

TEST(PairFactors, TsvdThreshold) {
    const auto model = model_with({2.0, 1.0}, 2);
    const Eigen::MatrixXd one = pair_filter_factors(model, FilterSpec::tsvd(1.5), Approach::one_step);
    EXPECT_EQ(one, (Eigen::Matrix2d() << 1, 1, 1, 0).finished());
}

TEST(PairFactors, TwoStepTsvdFollowsIndexRule) {
    const auto model = model_with({4.0, 3.0, 2.0, 1.0}, 5);
    const Eigen::MatrixXd two = pair_filter_factors(model, FilterSpec::tsvd(2), Approach::two_step);
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) EXPECT_EQ(two(i, j), (i < 2 && j < 2) ? 1.0 : 0.0);
}

TEST(PairFactors, DominanceAndProductDependence) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto model = random_model(5, 7, 300 + seed);
        for (double lambda : {0.0, 0.01, 0.3, 2.0, 50.0}) {
            const FilterSpec f = FilterSpec::tikhonov(lambda);
            const Eigen::VectorXd phi = filter_factors(model, f);
            const Eigen::MatrixXd one = pair_filter_factors(model, f, Approach::one_step);
            const Eigen::MatrixXd two = pair_filter_factors(model, f, Approach::two_step);
            for (Eigen::Index i = 0; i < 5; ++i) {
                for (Eigen::Index j = 0; j < 5; ++j) {
                    EXPECT_LE(two(i, j), std::min(phi(i), phi(j)) + 1e-15);
                    // (s_i^2 + l)(s_j^2 + l) - (s_i^2 s_j^2 + l) = l (s_i^2 + s_j^2 + l - 1),
                    // so one-step dominates exactly when s_i^2 + s_j^2 + l >= 1.
                    const double margin =
                        model.sigma()(i) * model.sigma()(i) + model.sigma()(j) * model.sigma()(j) + lambda - 1.0;
                    if (lambda == 0.0) {
                        EXPECT_EQ(one(i, j), two(i, j));
                    } else if (margin > 1e-9) {
                        EXPECT_GT(one(i, j), two(i, j));
                    } else if (margin < -1e-9) {
                        EXPECT_LT(one(i, j), two(i, j));
                    }
                    // symmetric in (i, j), so equal products carry equal factors
                    EXPECT_NEAR(one(i, j), one(j, i), 1e-12);
                }
            }
        }
    }
}

TEST(TwoStep, EqualsWelchOfReconstruction) {
    const auto model = random_model(4, 6, 3);
    const auto y = measure(model, 400, 3);
    const WelchConfig cfg{32, 0.5, Window::hann};
    const FilterSpec f = FilterSpec::tikhonov(0.4);
    const auto a = two_step_cross_spectrum(model, f, y, cfg);
    const auto b = welch_cross_spectrum(reconstruct(model, f, y), cfg);
    for (Eigen::Index k = 0; k < a.bins(); ++k) EXPECT_EQ(a[k], b[k]);
}

TEST(TwoStep, OperatorIdentity) {
    const auto model = random_model(4, 6, 4);
    const auto y = measure(model, 400, 4);
    const WelchConfig cfg{32, 0.5, Window::hann};
    for (const FilterSpec f : {FilterSpec::tikhonov(0.4), FilterSpec::tsvd(3)}) {
        const auto s = two_step_cross_spectrum(model, f, y, cfg);
        const Eigen::MatrixXd w = inverse_operator(model, f);
        const auto sy = welch_cross_spectrum(y, cfg);
        for (Eigen::Index k = 0; k < s.bins(); ++k) {
            const Eigen::MatrixXcd want = w.cast<std::complex<double>>() * sy[k] * w.transpose().cast<std::complex<double>>();
            EXPECT_LE((s[k] - want).norm(), 1e-10 * s[k].norm());
        }
    }
}

TEST(TwoStep, ExactInversionWithIdentityOperator) {
    const auto model = ForwardModel::decompose(Eigen::MatrixXd::Identity(3, 3));
    std::mt19937_64 rng(5);
    const TimeSeriesEnsemble x(oracle::gaussian(3, 200, rng), SeriesLabel::source);
    const auto y = forward_measure(model, x, TimeSeriesEnsemble(Eigen::MatrixXd::Zero(3, 200), SeriesLabel::noise));
    const WelchConfig cfg{20, 0.5, Window::hann};
    const auto a = two_step_cross_spectrum(model, FilterSpec::tsvd(3), y, cfg);
    const auto b = welch_cross_spectrum(x, cfg);
    for (Eigen::Index k = 0; k < a.bins(); ++k) EXPECT_LE((a[k] - b[k]).norm(), 1e-12 * b[k].norm());
}

TEST(TwoStep, HugeLambdaSuppresses) {
    const auto model = random_model(3, 5, 6);
    const auto y = measure(model, 200, 6);
    const auto s = two_step_cross_spectrum(model, FilterSpec::tikhonov(1e12), y, WelchConfig{20, 0.5, Window::hann});
    for (Eigen::Index k = 0; k < s.bins(); ++k) EXPECT_LT(s[k].norm(), 1e-18);
}

TEST(OneStep, TikhonovZeroIsPseudoInverseSandwich) {
    const auto model = random_model(4, 6, 7);
    const auto sy = welch_cross_spectrum(measure(model, 300, 7), WelchConfig{30, 0.5, Window::hann});
    const auto s = one_step_cross_spectrum(model, FilterSpec::tikhonov(0.0), sy);
    const Eigen::MatrixXd w0 = inverse_operator(model, FilterSpec::tikhonov(0.0));
    const auto want = sandwich(w0, sy, w0);
    for (Eigen::Index k = 0; k < s.bins(); ++k) EXPECT_LE((s[k] - want[k]).norm(), 1e-10 * want[k].norm());
}

TEST(OneStep, MatchesDenseKroneckerFormula) {
    const auto model = random_model(3, 4, 8);
    const auto sy = welch_cross_spectrum(measure(model, 120, 8), WelchConfig{12, 0.5, Window::hann});
    for (const FilterSpec f : {FilterSpec::tikhonov(0.3), FilterSpec::tsvd(0.8)}) {
        const auto s = one_step_cross_spectrum(model, f, sy);
        const Eigen::MatrixXd pf = pair_filter_factors(model, f, Approach::one_step);
        const Eigen::MatrixXd vv = kronecker_dense(model.v_range(), model.v_range(), true);
        const Eigen::MatrixXd uu = kronecker_dense(model.u(), model.u(), true);
        // With column stacking, column (i + j M) of U (x) U is u_j (x) u_i.
        Eigen::VectorXd diag(9);
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 3; ++j)
                diag(i + j * 3) = pf(i, j) / (model.sigma()(i) * model.sigma()(j));
        const Eigen::MatrixXcd op = (vv * diag.asDiagonal() * uu.transpose()).cast<std::complex<double>>();
        for (Eigen::Index k = 0; k < s.bins(); ++k) {
            const Eigen::VectorXcd want = op * sy.vectorized(k);
            EXPECT_LE((s.vectorized(k) - want).norm(), 1e-10 * want.norm());
        }
    }
}

TEST(OneStep, PreservesHermitian) {
    const auto model = random_model(4, 7, 9);
    const auto sy = welch_cross_spectrum(measure(model, 256, 9), WelchConfig{32, 0.5, Window::hann});
    for (const FilterSpec f : {FilterSpec::tikhonov(0.2), FilterSpec::tsvd(0.5)}) {
        const auto s = one_step_cross_spectrum(model, f, sy);
        for (Eigen::Index k = 0; k < s.bins(); ++k) EXPECT_LE((s[k] - s[k].adjoint()).norm(), 1e-12 * s[k].norm());
    }
}

TEST(OneStep, NoiseSubtraction) {
    const auto model = random_model(3, 5, 10);
    const auto sy = welch_cross_spectrum(measure(model, 200, 10), WelchConfig{20, 0.5, Window::hann});
    const auto sn = theoretical_white_spectrum(3, 0.25, 20);
    CrossSpectrum diff = sy;
    for (Eigen::Index k = 0; k < diff.bins(); ++k) diff[k] -= sn[k];
    const FilterSpec f = FilterSpec::tikhonov(0.1);
    const auto a = one_step_cross_spectrum(model, f, sy, sn);
    const auto b = one_step_cross_spectrum(model, f, diff);
    for (Eigen::Index k = 0; k < a.bins(); ++k) EXPECT_LE((a[k] - b[k]).norm(), 1e-12 * b[k].norm());
}

TEST(OneStep, ShapeError) {
    const auto model = random_model(3, 5, 11);
    EXPECT_THROW(one_step_cross_spectrum(model, FilterSpec::tikhonov(1.0), theoretical_white_spectrum(4, 1.0, 4)),
                 ShapeError);
}

TEST(PairTable, OneStepTikhonovMonotone) {
    const auto model = synthesize(SyntheticSpec{20, 25, {}, GeometricDecay{1.0, 0.7}, 0});
    for (double lambda : {1e-4, 1e-2, 0.1}) {
        const auto table = pair_filter_table(model, FilterSpec::tikhonov(lambda), Approach::one_step);
        ASSERT_EQ(table.size(), 400u);
        EXPECT_TRUE(is_monotone_in_product(table));
        EXPECT_FALSE(find_jitter_witness(table).has_value());
        for (std::size_t k = 1; k < table.size(); ++k) {
            if (table[k].sigma_product > table[k - 1].sigma_product * (1 + 1e-12)) {
                EXPECT_GT(table[k].factor, table[k - 1].factor);
            }
        }
    }
}

TEST(PairTable, TwoStepTsvdJitters) {
    const auto model = synthesize(SyntheticSpec{20, 25, {}, GeometricDecay{1.0, 0.7}, 0});
    const auto table = pair_filter_table(model, FilterSpec::tsvd(10), Approach::two_step);
    EXPECT_FALSE(is_monotone_in_product(table));
    const auto w = find_jitter_witness(table);
    ASSERT_TRUE(w.has_value());
    EXPECT_LT(w->lower.sigma_product, w->higher.sigma_product);
    EXPECT_GT(w->lower.factor, w->higher.factor);
}

TEST(PairTable, SortedWithOneBasedIndices) {
    const auto model = model_with({2.0, 1.0}, 2);
    const auto table = pair_filter_table(model, FilterSpec::tikhonov(1.0), Approach::one_step);
    ASSERT_EQ(table.size(), 4u);
    EXPECT_EQ(table[0].i, 2);
    EXPECT_EQ(table[0].j, 2);
    EXPECT_EQ(table[1].i, 1);
    EXPECT_EQ(table[1].j, 2);
    EXPECT_EQ(table[2].i, 2);
    EXPECT_EQ(table[2].j, 1);
    EXPECT_EQ(table[3].i, 1);
    EXPECT_NEAR(table[3].factor, 16.0 / 17.0, 1e-15);
}

TEST(PairTable, UnfilteredIsAllOnes) {
    const auto model = model_with({2.0, 1.0}, 3);
    for (const auto& [f, a] : {std::pair{FilterSpec::tikhonov(0.0), Approach::one_step},
                               std::pair{FilterSpec::tikhonov(0.0), Approach::two_step},
                               std::pair{FilterSpec::tsvd(2), Approach::two_step},
                               std::pair{FilterSpec::tsvd(0.5), Approach::one_step}}) {
        for (const auto& e : pair_filter_table(model, f, a)) EXPECT_EQ(e.factor, 1.0);
    }
}

TEST(PairTable, Csv) {
    const auto model = model_with({2.0}, 1);
    std::ostringstream out;
    write_pair_filter_csv(out, pair_filter_table(model, FilterSpec::tikhonov(4.0), Approach::one_step),
                          FilterSpec::tikhonov(4.0), Approach::one_step);
    EXPECT_EQ(out.str(), "sigma_product,factor,i,j,method,approach,lambda\n4,0.80000000000000004,1,1,tikhonov,one_step,4\n");
}
