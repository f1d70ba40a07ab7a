#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace crossreg {

enum class Method { tsvd, tikhonov };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view name);

/// Regularization method plus its parameter.
///
/// For Tikhonov the parameter is a real lambda >= 0 and larger values
/// regularize more. For truncated SVD the parameter counts retained
/// components (an integer in 1..M) when filtering per index; the one-step
/// cross-spectrum estimator instead reads it as a real threshold on the
/// products sigma_i * sigma_j.
class FilterSpec {
public:
    static FilterSpec tsvd(double lambda);
    static FilterSpec tikhonov(double lambda);

    Method method() const noexcept { return method_; }
    double lambda() const noexcept { return lambda_; }

    /// Number of retained components; throws InvalidParameter unless the
    /// filter is tSVD with an integer lambda in [1, sensors].
    Eigen::Index retained(Eigen::Index sensors) const;

    std::string describe() const;

private:
    FilterSpec(Method method, double lambda) : method_(method), lambda_(lambda) {}

    Method method_;
    double lambda_;
};

} // namespace crossreg
