#include "crossreg/spectral.hpp"

#include "crossreg/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

namespace crossreg {

using cd = std::complex<double>;

std::string_view to_string(Window window) noexcept {
    switch (window) {
    case Window::hann: return "hann";
    case Window::hamming: return "hamming";
    case Window::rectangular: return "rectangular";
    }
    return "unknown";
}

Window parse_window(std::string_view name) {
    if (name == "hann") return Window::hann;
    if (name == "hamming") return Window::hamming;
    if (name == "rectangular" || name == "boxcar") return Window::rectangular;
    throw ConfigError("unknown window '" + std::string(name) + "'");
}

Eigen::VectorXd window_samples(Window window, Eigen::Index length) {
    Eigen::VectorXd w(length);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(length);
    for (Eigen::Index t = 0; t < length; ++t) {
        const double c = std::cos(step * static_cast<double>(t));
        switch (window) {
        case Window::hann: w(t) = 0.5 - 0.5 * c; break;
        case Window::hamming: w(t) = 0.54 - 0.46 * c; break;
        case Window::rectangular: w(t) = 1.0; break;
        }
    }
    return w;
}

Eigen::Index WelchConfig::hop() const {
    return segment_length - static_cast<Eigen::Index>(std::floor(overlap * static_cast<double>(segment_length)));
}

Eigen::Index WelchConfig::segment_count(Eigen::Index samples) const {
    if (samples < segment_length) return 0;
    return (samples - segment_length) / hop() + 1;
}

double WelchConfig::window_energy() const {
    return window_samples(window, segment_length).squaredNorm() / static_cast<double>(segment_length);
}

void WelchConfig::validate(Eigen::Index samples) const {
    if (segment_length < 2) {
        throw ConfigError("welch.segment_length must be >= 2");
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) {
        throw ConfigError("welch.overlap must lie in [0, 1)");
    }
    if (segment_length > samples) {
        std::ostringstream msg;
        msg << "welch.segment_length (" << segment_length << ") exceeds the number of samples (" << samples << ")";
        throw ConfigError(msg.str());
    }
    if (!(window_energy() > 0.0)) {
        throw ConfigError("welch window has zero energy");
    }
}

CrossSpectrum::CrossSpectrum(Eigen::Index rows, Eigen::Index cols, Eigen::Index bins)
    : rows_(rows), cols_(cols), matrices_(static_cast<std::size_t>(bins), Eigen::MatrixXcd::Zero(rows, cols)) {}

CrossSpectrum::CrossSpectrum(std::vector<Eigen::MatrixXcd> matrices) : matrices_(std::move(matrices)) {
    if (matrices_.empty()) {
        throw ShapeError("cross-spectrum needs at least one frequency bin");
    }
    rows_ = matrices_.front().rows();
    cols_ = matrices_.front().cols();
    for (const auto& m : matrices_) {
        if (m.rows() != rows_ || m.cols() != cols_) {
            throw ShapeError("cross-spectrum bins have inconsistent shapes");
        }
    }
}

Eigen::VectorXcd CrossSpectrum::vectorized(Eigen::Index f) const {
    const auto& m = (*this)[f];
    return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

namespace {

// Windowed, 1/L-normalized DFT of segment p of every row of x, written into dst (dim x L).
class SegmentTransform {
public:
    explicit SegmentTransform(const WelchConfig& cfg)
        : len_(cfg.segment_length), hop_(cfg.hop()), window_(window_samples(cfg.window, cfg.segment_length)),
          buffer_(static_cast<std::size_t>(len_)) {}

    void operator()(const Eigen::MatrixXd& x, Eigen::Index p, Eigen::MatrixXcd& dst) {
        dst.resize(x.rows(), len_);
        const double norm = 1.0 / static_cast<double>(len_);
        for (Eigen::Index k = 0; k < x.rows(); ++k) {
            for (Eigen::Index t = 0; t < len_; ++t) {
                buffer_[static_cast<std::size_t>(t)] = window_(t) * x(k, p * hop_ + t);
            }
            fft_.fwd(spectrum_, buffer_);
            for (Eigen::Index f = 0; f < len_; ++f) {
                dst(k, f) = spectrum_[static_cast<std::size_t>(f)] * norm;
            }
        }
    }

private:
    Eigen::Index len_;
    Eigen::Index hop_;
    Eigen::VectorXd window_;
    Eigen::FFT<double> fft_;
    std::vector<double> buffer_;
    std::vector<cd> spectrum_;
};

} // namespace

CrossSpectrum cross_spectrum_between(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const WelchConfig& cfg) {
    if (a.cols() != b.cols()) {
        throw ShapeError("cross_spectrum_between: series have different lengths");
    }
    if (a.rows() < 1 || b.rows() < 1) {
        throw ShapeError("cross_spectrum_between: empty series");
    }
    cfg.validate(a.cols());

    const Eigen::Index len = cfg.segment_length;
    const Eigen::Index segments = cfg.segment_count(a.cols());
    const bool same = &a == &b;
    SegmentTransform transform(cfg);
    Eigen::MatrixXcd xa;
    Eigen::MatrixXcd xb;

    CrossSpectrum s(a.rows(), b.rows(), len);
    for (Eigen::Index p = 0; p < segments; ++p) {
        transform(a, p, xa);
        if (!same) {
            transform(b, p, xb);
        }
        const Eigen::MatrixXcd& rhs = same ? xa : xb;
        for (Eigen::Index f = 0; f < len; ++f) {
            auto& m = s[f];
            for (Eigen::Index k = 0; k < b.rows(); ++k) {
                const cd bk = std::conj(rhs(k, f));
                for (Eigen::Index j = 0; j < a.rows(); ++j) {
                    m(j, k) += xa(j, f) * bk;
                }
            }
        }
    }
    const double scale = static_cast<double>(len) / (static_cast<double>(segments) * cfg.window_energy());
    for (Eigen::Index f = 0; f < len; ++f) {
        s[f] *= scale;
    }
    return s;
}

CrossSpectrum cross_spectrum_between(const TimeSeriesEnsemble& a, const TimeSeriesEnsemble& b, const WelchConfig& cfg) {
    return cross_spectrum_between(a.data(), b.data(), cfg);
}

CrossSpectrum welch_cross_spectrum(const Eigen::MatrixXd& x, const WelchConfig& cfg) {
    return cross_spectrum_between(x, x, cfg);
}

CrossSpectrum welch_cross_spectrum(const TimeSeriesEnsemble& x, const WelchConfig& cfg) {
    return welch_cross_spectrum(x.data(), cfg);
}

CrossSpectrum theoretical_white_spectrum(Eigen::Index dim, double variance, Eigen::Index bins) {
    if (dim < 1 || bins < 1) {
        throw ShapeError("white spectrum needs dim >= 1 and bins >= 1");
    }
    if (!(variance > 0.0)) {
        throw InvalidSpec("white spectrum variance must be positive");
    }
    CrossSpectrum s(dim, dim, bins);
    for (Eigen::Index f = 0; f < bins; ++f) {
        s[f].diagonal().setConstant(cd(variance, 0.0));
    }
    return s;
}

CrossSpectrum sandwich(const Eigen::MatrixXd& a, const CrossSpectrum& s, const Eigen::MatrixXd& b) {
    if (a.cols() != s.rows() || b.cols() != s.cols()) {
        throw ShapeError("sandwich: operator shapes do not match the spectrum");
    }
    const Eigen::MatrixXcd ac = a.cast<cd>();
    const Eigen::MatrixXcd bt = b.transpose().cast<cd>();
    std::vector<Eigen::MatrixXcd> out(static_cast<std::size_t>(s.bins()));
    for (Eigen::Index f = 0; f < s.bins(); ++f) {
        out[static_cast<std::size_t>(f)] = ac * s[f] * bt;
    }
    return CrossSpectrum(std::move(out));
}

void write_csv(std::ostream& out, const CrossSpectrum& s) {
    out << "f,j,k,re,im\n";
    char buf[128];
    for (Eigen::Index f = 0; f < s.bins(); ++f) {
        for (Eigen::Index k = 0; k < s.cols(); ++k) {
            for (Eigen::Index j = 0; j < s.rows(); ++j) {
                const cd v = s[f](j, k);
                std::snprintf(buf, sizeof buf, "%ld,%ld,%ld,%.17g,%.17g\n", static_cast<long>(f),
                              static_cast<long>(j), static_cast<long>(k), v.real(), v.imag());
                out << buf;
            }
        }
    }
}

} // namespace crossreg
