#pragma once

#include "crossreg/filter.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace crossreg {

/// Forward matrix G (M x N, M <= N) together with its full SVD G = U S V^t.
///
/// Singular values are sorted descending and strictly positive. Each left
/// singular vector is sign-normalized so its largest-magnitude entry is
/// positive; the matching right vector is flipped along with it. The trailing
/// N - M columns of V span the kernel of G and follow the same rule.
class ForwardModel {
public:
    static constexpr double default_rank_tol = 1e-12;

    /// SVD of `g`. Throws ShapeError if M > N and RankDeficient if
    /// sigma_M <= rank_tol * sigma_1.
    static ForwardModel decompose(const Eigen::MatrixXd& g, double rank_tol = default_rank_tol);

    /// Builds a model from explicit factors. `sigma` may be in any order; it
    /// is sorted descending together with the columns of `u` and the leading
    /// columns of `v`.
    static ForwardModel from_factors(const Eigen::MatrixXd& u,
                                     const Eigen::VectorXd& sigma,
                                     const Eigen::MatrixXd& v);

    const Eigen::MatrixXd& matrix() const noexcept { return g_; }
    const Eigen::MatrixXd& u() const noexcept { return u_; }
    const Eigen::VectorXd& sigma() const noexcept { return sigma_; }
    const Eigen::MatrixXd& v() const noexcept { return v_; }

    /// Columns v_1..v_M (the row space of G).
    Eigen::MatrixXd v_range() const { return v_.leftCols(sensors()); }

    Eigen::Index sensors() const noexcept { return g_.rows(); }
    Eigen::Index sources() const noexcept { return g_.cols(); }

private:
    ForwardModel(Eigen::MatrixXd g, Eigen::MatrixXd u, Eigen::VectorXd sigma, Eigen::MatrixXd v);

    Eigen::MatrixXd g_;
    Eigen::MatrixXd u_;
    Eigen::VectorXd sigma_;
    Eigen::MatrixXd v_;
};

/// Geometric decay sigma_i = first * ratio^(i-1).
struct GeometricDecay {
    double first = 1.0;
    double ratio = 0.7;
};

/// Recipe for a synthetic operator with a prescribed spectrum and Haar
/// random singular vectors.
struct SyntheticSpec {
    Eigen::Index sensors = 0;
    Eigen::Index sources = 0;
    std::vector<double> sigma;            // explicit spectrum, used when non-empty
    std::optional<GeometricDecay> decay;  // used when sigma is empty
    std::uint64_t seed = 0;

    std::vector<double> spectrum() const;
};

ForwardModel synthesize(const SyntheticSpec& spec);

/// Haar-distributed n x n orthogonal matrix: QR of a seeded Gaussian matrix
/// with the columns of Q rescaled by sign(diag(R)).
Eigen::MatrixXd haar_orthogonal(Eigen::Index n, std::uint64_t seed);

/// W = sum_i v_i (phi_i / sigma_i) u_i^t, an N x M matrix.
Eigen::MatrixXd inverse_operator(const ForwardModel& model, const FilterSpec& filter);

/// R = W G = sum_i v_i phi_i v_i^t, an N x N matrix.
Eigen::MatrixXd resolution_matrix(const ForwardModel& model, const FilterSpec& filter);

/// One singular value sigma_i * sigma_j of G (x) G with its (zero-based) index pair.
struct SingularPair {
    double product;
    Eigen::Index i;
    Eigen::Index j;
};

/// Implicit SVD of G (x) G = (U (x) U)(S (x) S)(V (x) V)^t.
///
/// Only the M^2 singular products are stored; the factors u_i (x) u_j and
/// v_i (x) v_j are never formed. Products are sorted descending, ties broken
/// by (i, j) in lexicographic order.
class KroneckerSvd {
public:
    explicit KroneckerSvd(const ForwardModel& model);

    const std::vector<SingularPair>& pairs() const noexcept { return pairs_; }

    /// (G (x) G) vec(A) reshaped back to a matrix, i.e. G A G^t.
    Eigen::MatrixXcd apply(const Eigen::MatrixXcd& a) const;

    /// Dense M^2 x N^2 matrix G (x) G. Requires allow_dense and N^2 <= 1e4.
    Eigen::MatrixXd materialize(bool allow_dense) const;

private:
    ForwardModel model_;
    std::vector<SingularPair> pairs_;
};

/// Dense Kronecker product a (x) b. Throws InvalidParameter unless
/// allow_dense is set and both result dimensions are at most 1e4.
Eigen::MatrixXd kronecker_dense(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool allow_dense);

} // namespace crossreg
