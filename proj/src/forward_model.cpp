#include "crossreg/forward_model.hpp"

#include "crossreg/errors.hpp"
#include "crossreg/regularizers.hpp"
#include "crossreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace crossreg {

namespace {

constexpr double orthogonality_tol = 1e-10;

// Flip column `c` of `q` so its largest-magnitude entry is positive; returns the sign used.
double normalize_sign(Eigen::MatrixXd& q, Eigen::Index c) {
    Eigen::Index arg = 0;
    q.col(c).cwiseAbs().maxCoeff(&arg);
    const double sign = q(arg, c) < 0.0 ? -1.0 : 1.0;
    q.col(c) *= sign;
    return sign;
}

void check_orthogonal(const Eigen::MatrixXd& q, const char* name) {
    const Eigen::MatrixXd gram = q.transpose() * q;
    const double err = (gram - Eigen::MatrixXd::Identity(q.cols(), q.cols())).norm();
    if (err > orthogonality_tol) {
        std::ostringstream msg;
        msg << name << " is not orthogonal (||Q^tQ - I||_F = " << err << ")";
        throw InvalidParameter(msg.str());
    }
}

} // namespace

ForwardModel::ForwardModel(Eigen::MatrixXd g, Eigen::MatrixXd u, Eigen::VectorXd sigma, Eigen::MatrixXd v)
    : g_(std::move(g)), u_(std::move(u)), sigma_(std::move(sigma)), v_(std::move(v)) {}

ForwardModel ForwardModel::decompose(const Eigen::MatrixXd& g, double rank_tol) {
    const Eigen::Index m = g.rows();
    const Eigen::Index n = g.cols();
    if (m == 0 || n == 0) {
        throw ShapeError("forward matrix is empty");
    }
    if (m > n) {
        std::ostringstream msg;
        msg << "forward matrix has more sensors than sources (" << m << " x " << n << ")";
        throw ShapeError(msg.str());
    }
    if (!g.allFinite()) {
        throw InvalidParameter("forward matrix has non-finite entries");
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd sigma = svd.singularValues();
    if (!(sigma(m - 1) > rank_tol * sigma(0))) {
        std::ostringstream msg;
        msg << "forward matrix is rank deficient: sigma_M = " << sigma(m - 1)
            << ", sigma_1 = " << sigma(0);
        throw RankDeficient(msg.str());
    }

    Eigen::MatrixXd u = svd.matrixU();
    Eigen::MatrixXd v = svd.matrixV();
    for (Eigen::Index i = 0; i < m; ++i) {
        v.col(i) *= normalize_sign(u, i);
    }
    for (Eigen::Index i = m; i < n; ++i) {
        normalize_sign(v, i);
    }
    return ForwardModel(g, std::move(u), std::move(sigma), std::move(v));
}

ForwardModel ForwardModel::from_factors(const Eigen::MatrixXd& u,
                                        const Eigen::VectorXd& sigma,
                                        const Eigen::MatrixXd& v) {
    const Eigen::Index m = u.rows();
    const Eigen::Index n = v.rows();
    if (u.cols() != m || v.cols() != n || sigma.size() != m) {
        throw ShapeError("inconsistent factor shapes");
    }
    if (m == 0 || m > n) {
        throw ShapeError("factors must describe an M x N operator with 0 < M <= N");
    }
    if ((sigma.array() <= 0.0).any() || !sigma.allFinite()) {
        throw InvalidSpectrum("singular values must be finite and strictly positive");
    }
    check_orthogonal(u, "U");
    check_orthogonal(v, "V");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return sigma(a) > sigma(b); });

    Eigen::MatrixXd u_sorted(m, m);
    Eigen::VectorXd s_sorted(m);
    Eigen::MatrixXd v_sorted = v;
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        u_sorted.col(k) = u.col(src);
        s_sorted(k) = sigma(src);
        v_sorted.col(k) = v.col(src);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        v_sorted.col(i) *= normalize_sign(u_sorted, i);
    }
    for (Eigen::Index i = m; i < n; ++i) {
        normalize_sign(v_sorted, i);
    }

    Eigen::MatrixXd g = u_sorted * s_sorted.asDiagonal() * v_sorted.leftCols(m).transpose();
    return ForwardModel(std::move(g), std::move(u_sorted), std::move(s_sorted), std::move(v_sorted));
}

std::vector<double> SyntheticSpec::spectrum() const {
    if (!sigma.empty()) {
        return sigma;
    }
    if (!decay) {
        throw InvalidSpectrum("synthetic spec needs an explicit spectrum or a decay law");
    }
    if (!(decay->ratio > 0.0 && decay->ratio < 1.0)) {
        throw InvalidSpectrum("geometric ratio must lie in (0, 1)");
    }
    std::vector<double> out(static_cast<std::size_t>(std::max<Eigen::Index>(sensors, 0)));
    double value = decay->first;
    for (auto& s : out) {
        s = value;
        value *= decay->ratio;
    }
    return out;
}

Eigen::MatrixXd haar_orthogonal(Eigen::Index n, std::uint64_t seed) {
    GaussianSource gauss(seed);
    const Eigen::MatrixXd z = gauss.matrix(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd& r = qr.matrixQR();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (r(i, i) < 0.0) {
            q.col(i) *= -1.0;
        }
    }
    return q;
}

ForwardModel synthesize(const SyntheticSpec& spec) {
    if (spec.sensors < 1 || spec.sources < spec.sensors) {
        std::ostringstream msg;
        msg << "synthetic model needs 1 <= M <= N (got M = " << spec.sensors << ", N = " << spec.sources << ")";
        throw ShapeError(msg.str());
    }
    const std::vector<double> spectrum = spec.spectrum();
    if (static_cast<Eigen::Index>(spectrum.size()) != spec.sensors) {
        throw ShapeError("spectrum length must equal the number of sensors");
    }
    for (double s : spectrum) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw InvalidSpectrum("requested singular values must be finite and strictly positive");
        }
    }
    const Eigen::MatrixXd u = haar_orthogonal(spec.sensors, child_seed(spec.seed, 0));
    const Eigen::MatrixXd v = haar_orthogonal(spec.sources, child_seed(spec.seed, 1));
    const Eigen::VectorXd sigma = Eigen::Map<const Eigen::VectorXd>(spectrum.data(), spec.sensors);
    return ForwardModel::from_factors(u, sigma, v);
}

Eigen::MatrixXd inverse_operator(const ForwardModel& model, const FilterSpec& filter) {
    const Eigen::VectorXd weights = filter_factors(model, filter).cwiseQuotient(model.sigma());
    return model.v_range() * weights.asDiagonal() * model.u().transpose();
}

Eigen::MatrixXd resolution_matrix(const ForwardModel& model, const FilterSpec& filter) {
    const Eigen::VectorXd phi = filter_factors(model, filter);
    const Eigen::MatrixXd v1 = model.v_range();
    return v1 * phi.asDiagonal() * v1.transpose();
}

KroneckerSvd::KroneckerSvd(const ForwardModel& model) : model_(model) {
    const Eigen::Index m = model.sensors();
    const Eigen::VectorXd& s = model.sigma();
    pairs_.reserve(static_cast<std::size_t>(m * m));
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            pairs_.push_back({s(i) * s(j), i, j});
        }
    }
    std::stable_sort(pairs_.begin(), pairs_.end(), [](const SingularPair& a, const SingularPair& b) {
        return a.product > b.product;
    });
}

Eigen::MatrixXcd KroneckerSvd::apply(const Eigen::MatrixXcd& a) const {
    const Eigen::Index n = model_.sources();
    if (a.rows() != n || a.cols() != n) {
        throw ShapeError("Kronecker operator expects an N x N argument");
    }
    const Eigen::MatrixXcd g = model_.matrix().cast<std::complex<double>>();
    return g * a * g.transpose();
}

Eigen::MatrixXd KroneckerSvd::materialize(bool allow_dense) const {
    return kronecker_dense(model_.matrix(), model_.matrix(), allow_dense);
}

Eigen::MatrixXd kronecker_dense(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool allow_dense) {
    constexpr Eigen::Index max_side = 10000;
    const Eigen::Index rows = a.rows() * b.rows();
    const Eigen::Index cols = a.cols() * b.cols();
    if (!allow_dense || rows > max_side || cols > max_side) {
        throw InvalidParameter("dense Kronecker product refused; use the implicit operator");
    }
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

} // namespace crossreg
