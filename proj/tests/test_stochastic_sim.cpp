#include <gtest/gtest.h>

#include "crossreg/errors.hpp"
#include "crossreg/regularizers.hpp"
#include "crossreg/rng.hpp"
#include "crossreg/stochastic_sim.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace crossreg;

namespace {

ForwardModel random_model(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return ForwardModel::decompose(oracle::gaussian(m, n, rng));
}

TimeSeriesEnsemble series(const Eigen::MatrixXd& m, SeriesLabel label = SeriesLabel::source) {
    return TimeSeriesEnsemble(m, label);
}

} // namespace

TEST(Rng, ChildSeedsDiffer) {
    EXPECT_NE(child_seed(1, 0), child_seed(1, 1));
    EXPECT_NE(child_seed(1, 0), child_seed(2, 0));
    EXPECT_EQ(child_seed(5, 3), child_seed(5, 3));
}

TEST(Rng, GaussianMoments) {
    GaussianSource g(3);
    double sum = 0.0, sq = 0.0, quad = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double z = g.next();
        sum += z;
        sq += z * z;
        quad += z * z * z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.01);
    EXPECT_NEAR(quad / n, 3.0, 0.06);
}

TEST(SimulateWhite, CovarianceNearIdentity) {
    const auto x = simulate_white(WhiteProcessSpec{3, 1.0, 17, SeriesLabel::source}, 100000);
    const Eigen::MatrixXd cov = x.data() * x.data().transpose() / 100000.0;
    EXPECT_LE((cov - Eigen::Matrix3d::Identity()).norm(), 0.05 * std::sqrt(3.0));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) EXPECT_LT(std::abs(cov(i, j)), 0.03);
}

TEST(SimulateWhite, VarianceScales) {
    const auto x = simulate_white(WhiteProcessSpec{2, 4.0, 1, SeriesLabel::noise}, 50000);
    const double mean_sq = x.data().squaredNorm() / static_cast<double>(x.data().size());
    EXPECT_GE(mean_sq, 3.8);
    EXPECT_LE(mean_sq, 4.2);
    EXPECT_EQ(x.label(), SeriesLabel::noise);
}

TEST(SimulateWhite, Deterministic) {
    const WhiteProcessSpec spec{4, 2.0, 99, SeriesLabel::source};
    EXPECT_EQ(simulate_white(spec, 257).data(), simulate_white(spec, 257).data());
    WhiteProcessSpec other = spec;
    other.seed = 100;
    EXPECT_NE(simulate_white(spec, 16).data(), simulate_white(other, 16).data());
}

TEST(SimulateWhite, IndependentStreamsDecorrelate) {
    const auto a = simulate_white(WhiteProcessSpec{2, 1.0, child_seed(0, 0)}, 1 << 16);
    const auto b = simulate_white(WhiteProcessSpec{2, 1.0, child_seed(0, 1)}, 1 << 16);
    const Eigen::MatrixXd cross = a.data() * b.data().transpose() / 65536.0;
    EXPECT_LT(cross.cwiseAbs().maxCoeff(), 5.0 / std::sqrt(65536.0));
}

TEST(SimulateWhite, Errors) {
    EXPECT_THROW(simulate_white(WhiteProcessSpec{0, 1.0, 0}, 10), InvalidSpec);
    EXPECT_THROW(simulate_white(WhiteProcessSpec{2, 0.0, 0}, 10), InvalidSpec);
    EXPECT_THROW(simulate_white(WhiteProcessSpec{2, -1.0, 0}, 10), InvalidSpec);
    EXPECT_THROW(simulate_white(WhiteProcessSpec{2, 1.0, 0}, 0), InvalidSpec);
}

TEST(TimeSeriesEnsemble, RejectsNonFinite) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
    m(1, 2) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(series(m), InvalidSpec);
    EXPECT_THROW(series(Eigen::MatrixXd(0, 3)), ShapeError);
}

TEST(ForwardMeasure, NoiselessIdentity) {
    const auto model = ForwardModel::decompose(Eigen::MatrixXd::Identity(3, 3));
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd x = oracle::gaussian(3, 9, rng);
    const auto y = forward_measure(model, series(x), series(Eigen::MatrixXd::Zero(3, 9), SeriesLabel::noise));
    EXPECT_EQ(y.data(), x);
    EXPECT_EQ(y.label(), SeriesLabel::measurement);
}

TEST(ForwardMeasure, PureNoise) {
    const auto model = random_model(3, 4, 2);
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd n = oracle::gaussian(3, 5, rng);
    const auto y = forward_measure(model, series(Eigen::MatrixXd::Zero(4, 5)), series(n, SeriesLabel::noise));
    EXPECT_EQ(y.data(), n);
}

TEST(ForwardMeasure, TripleLoopOracle) {
    const auto model = random_model(3, 4, 3);
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = oracle::gaussian(4, 7, rng);
    const Eigen::MatrixXd n = oracle::gaussian(3, 7, rng);
    const auto y = forward_measure(model, series(x), series(n, SeriesLabel::noise));
    const Eigen::MatrixXd want = oracle::matmul(model.matrix(), x) + n;
    EXPECT_LE((y.data() - want).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ForwardMeasure, ShapeErrors) {
    const auto model = random_model(3, 4, 4);
    EXPECT_THROW(forward_measure(model, series(Eigen::MatrixXd::Zero(3, 5)), series(Eigen::MatrixXd::Zero(3, 5))),
                 ShapeError);
    EXPECT_THROW(forward_measure(model, series(Eigen::MatrixXd::Zero(4, 5)), series(Eigen::MatrixXd::Zero(3, 6))),
                 ShapeError);
}

TEST(Reconstruct, ExactInversionWithoutNoise) {
    const auto model = random_model(4, 4, 5);
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd x = oracle::gaussian(4, 11, rng);
    const auto y = forward_measure(model, series(x), series(Eigen::MatrixXd::Zero(4, 11)));
    const auto rec = reconstruct(model, FilterSpec::tsvd(4), y);
    EXPECT_LE((rec.data() - x).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(rec.label(), SeriesLabel::reconstruction);
}

TEST(Reconstruct, HugeLambdaAnnihilates) {
    const auto model = random_model(3, 5, 6);
    std::mt19937_64 rng(6);
    const auto y = series(oracle::gaussian(3, 8, rng), SeriesLabel::measurement);
    const auto rec = reconstruct(model, FilterSpec::tikhonov(1e12), y);
    const double bound = y.data().norm() * model.sigma()(0) / 1e12;
    EXPECT_LE(rec.data().norm(), bound * (1.0 + 1e-9));
}

TEST(Reconstruct, ResolutionIdentityOverRandomGrid) {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(seed % 4);
        const Eigen::Index n = m + static_cast<Eigen::Index>(seed % 3);
        const auto model = random_model(m, n, 200 + seed);
        std::mt19937_64 rng(seed);
        const Eigen::MatrixXd x = oracle::gaussian(n, 6, rng);
        const Eigen::MatrixXd noise = 0.3 * oracle::gaussian(m, 6, rng);
        const auto y = forward_measure(model, series(x), series(noise, SeriesLabel::noise));
        std::vector<FilterSpec> filters{FilterSpec::tikhonov(0.0), FilterSpec::tikhonov(0.05), FilterSpec::tikhonov(2.0)};
        for (Eigen::Index k = 1; k <= m; ++k) filters.push_back(FilterSpec::tsvd(static_cast<double>(k)));
        for (const auto& f : filters) {
            const Eigen::MatrixXd rec = reconstruct(model, f, y).data();
            const Eigen::MatrixXd w = oracle::matmul(
                oracle::matmul(model.v_range(), filter_factors(model, f).cwiseQuotient(model.sigma()).asDiagonal()),
                model.u().transpose());
            const Eigen::MatrixXd want = oracle::matmul(oracle::matmul(w, model.matrix()), x) + oracle::matmul(w, noise);
            EXPECT_LE((rec - want).norm(), 1e-10 * std::max(rec.norm(), 1.0));
            ++checked;
        }
    }
    EXPECT_GE(checked, 50);
}

TEST(Reconstruct, ShapeError) {
    const auto model = random_model(3, 5, 7);
    EXPECT_THROW(reconstruct(model, FilterSpec::tikhonov(1.0), series(Eigen::MatrixXd::Zero(4, 2))), ShapeError);
}

TEST(WriteCsv, HeaderAndRows) {
    Eigen::MatrixXd m(2, 3);
    m << 1, 2, 3, 4, 5, 0.1;
    std::ostringstream out;
    write_csv(out, series(m, SeriesLabel::measurement));
    EXPECT_EQ(out.str(), "# label=measurement dim=2 samples=3\n"
                         "measurement_0,measurement_1\n"
                         "1,4\n2,5\n3,0.10000000000000001\n");
}
