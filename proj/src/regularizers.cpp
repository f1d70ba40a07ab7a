#include "crossreg/regularizers.hpp"

#include "crossreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace crossreg {

std::string_view to_string(Method method) noexcept {
    return method == Method::tsvd ? "tsvd" : "tikhonov";
}

Method parse_method(std::string_view name) {
    if (name == "tsvd") return Method::tsvd;
    if (name == "tikhonov") return Method::tikhonov;
    throw InvalidParameter("unknown regularization method '" + std::string(name) + "'");
}

std::string_view to_string(Approach approach) noexcept {
    return approach == Approach::one_step ? "one_step" : "two_step";
}

FilterSpec FilterSpec::tsvd(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidParameter("tSVD parameter must be positive and finite");
    }
    return FilterSpec(Method::tsvd, lambda);
}

FilterSpec FilterSpec::tikhonov(double lambda) {
    if (!(lambda >= 0.0) || std::isnan(lambda)) {
        throw InvalidParameter("Tikhonov parameter must be >= 0");
    }
    return FilterSpec(Method::tikhonov, lambda);
}

Eigen::Index FilterSpec::retained(Eigen::Index sensors) const {
    if (method_ != Method::tsvd) {
        throw InvalidParameter("retained() only applies to tSVD filters");
    }
    if (lambda_ != std::floor(lambda_) || lambda_ < 1.0 || lambda_ > static_cast<double>(sensors)) {
        std::ostringstream msg;
        msg << "tSVD parameter must be an integer in [1, " << sensors << "], got " << lambda_;
        throw InvalidParameter(msg.str());
    }
    return static_cast<Eigen::Index>(lambda_);
}

std::string FilterSpec::describe() const {
    std::ostringstream out;
    out << to_string(method_) << "(" << lambda_ << ")";
    return out.str();
}

Eigen::VectorXd filter_factors(const ForwardModel& model, const FilterSpec& filter) {
    const Eigen::Index m = model.sensors();
    const Eigen::VectorXd s2 = model.sigma().array().square();
    if (filter.method() == Method::tsvd) {
        const Eigen::Index k = filter.retained(m);
        Eigen::VectorXd phi = Eigen::VectorXd::Zero(m);
        phi.head(k).setOnes();
        return phi;
    }
    if (std::isinf(filter.lambda())) {
        return Eigen::VectorXd::Zero(m);
    }
    return s2.array() / (s2.array() + filter.lambda());
}

Eigen::MatrixXd pair_filter_factors(const ForwardModel& model, const FilterSpec& filter, Approach approach) {
    if (approach == Approach::two_step) {
        const Eigen::VectorXd phi = filter_factors(model, filter);
        return phi * phi.transpose();
    }
    const Eigen::VectorXd& s = model.sigma();
    const Eigen::MatrixXd products = s * s.transpose();
    if (filter.method() == Method::tsvd) {
        return (products.array() >= filter.lambda()).cast<double>().matrix();
    }
    const Eigen::ArrayXXd p2 = products.array().square();
    return (p2 / (p2 + filter.lambda())).matrix();
}

CrossSpectrum two_step_cross_spectrum(const ForwardModel& model,
                                      const FilterSpec& filter,
                                      const TimeSeriesEnsemble& y,
                                      const WelchConfig& cfg) {
    return welch_cross_spectrum(reconstruct(model, filter, y), cfg);
}

CrossSpectrum one_step_cross_spectrum(const ForwardModel& model,
                                      const FilterSpec& filter,
                                      const CrossSpectrum& sy,
                                      const std::optional<CrossSpectrum>& noise) {
    const Eigen::Index m = model.sensors();
    if (sy.rows() != m || sy.cols() != m) {
        throw ShapeError("data cross-spectrum must be M x M");
    }
    if (noise && (noise->rows() != m || noise->cols() != m || noise->bins() != sy.bins())) {
        throw ShapeError("noise cross-spectrum must match the data cross-spectrum");
    }
    const Eigen::MatrixXcd factors = pair_filter_factors(model, filter, Approach::one_step).cast<std::complex<double>>();
    const Eigen::VectorXd inv_sigma = model.sigma().cwiseInverse();
    const Eigen::MatrixXcd u = model.u().cast<std::complex<double>>();
    const Eigen::MatrixXcd v1 = model.v_range().cast<std::complex<double>>();
    const Eigen::MatrixXcd scale = (inv_sigma * inv_sigma.transpose()).cast<std::complex<double>>();

    std::vector<Eigen::MatrixXcd> out(static_cast<std::size_t>(sy.bins()));
    for (Eigen::Index f = 0; f < sy.bins(); ++f) {
        Eigen::MatrixXcd data = sy[f];
        if (noise) {
            data -= (*noise)[f];
        }
        const Eigen::MatrixXcd projected = u.transpose() * data * u;
        const Eigen::MatrixXcd filtered = factors.cwiseProduct(scale).cwiseProduct(projected);
        out[static_cast<std::size_t>(f)] = v1 * filtered * v1.transpose();
    }
    return CrossSpectrum(std::move(out));
}

std::vector<PairFilterEntry> pair_filter_table(const ForwardModel& model,
                                               const FilterSpec& filter,
                                               Approach approach) {
    const Eigen::MatrixXd factors = pair_filter_factors(model, filter, approach);
    const Eigen::VectorXd& s = model.sigma();
    const Eigen::Index m = model.sensors();
    std::vector<PairFilterEntry> table;
    table.reserve(static_cast<std::size_t>(m * m));
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            table.push_back({s(i) * s(j), factors(i, j), i + 1, j + 1});
        }
    }
    std::stable_sort(table.begin(), table.end(), [](const PairFilterEntry& a, const PairFilterEntry& b) {
        if (a.sigma_product != b.sigma_product) return a.sigma_product < b.sigma_product;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    return table;
}

void write_pair_filter_csv(std::ostream& out,
                           const std::vector<PairFilterEntry>& table,
                           const FilterSpec& filter,
                           Approach approach,
                           bool header) {
    if (header) {
        out << "sigma_product,factor,i,j,method,approach,lambda\n";
    }
    char buf[160];
    for (const auto& e : table) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%ld,%ld,", e.sigma_product, e.factor,
                      static_cast<long>(e.i), static_cast<long>(e.j));
        out << buf << to_string(filter.method()) << ',' << to_string(approach) << ',';
        std::snprintf(buf, sizeof buf, "%.17g\n", filter.lambda());
        out << buf;
    }
}

} // namespace crossreg

namespace crossreg {

bool is_monotone_in_product(const std::vector<PairFilterEntry>& table, double tol) {
    for (std::size_t k = 1; k < table.size(); ++k) {
        const auto& prev = table[k - 1];
        const auto& cur = table[k];
        if (cur.sigma_product == prev.sigma_product) {
            if (std::abs(cur.factor - prev.factor) > tol) return false;
        } else if (cur.factor < prev.factor - tol) {
            return false;
        }
    }
    return true;
}

std::optional<JitterWitness> find_jitter_witness(const std::vector<PairFilterEntry>& table) {
    // table is sorted by product: track the largest factor seen at strictly smaller products
    std::optional<PairFilterEntry> best_below;
    std::size_t group_start = 0;
    for (std::size_t k = 0; k < table.size(); ++k) {
        if (k > 0 && table[k].sigma_product != table[k - 1].sigma_product) {
            for (std::size_t g = group_start; g < k; ++g) {
                if (!best_below || table[g].factor > best_below->factor) best_below = table[g];
            }
            group_start = k;
        }
        if (best_below && best_below->factor > table[k].factor) {
            return JitterWitness{*best_below, table[k]};
        }
    }
    return std::nullopt;
}

} // namespace crossreg
