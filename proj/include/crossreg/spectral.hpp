#pragma once

#include "crossreg/stochastic_sim.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string_view>
#include <vector>

namespace crossreg {

enum class Window { hann, hamming, rectangular };

std::string_view to_string(Window window) noexcept;
Window parse_window(std::string_view name);

/// Periodic window of length L: w(t) for t = 0..L-1.
Eigen::VectorXd window_samples(Window window, Eigen::Index length);

/// Segmentation and tapering for Welch's method.
///
/// Segments start every hop() samples, hop = L - floor(overlap * L). Trailing
/// samples that do not fill a whole segment are dropped.
struct WelchConfig {
    Eigen::Index segment_length = 256;
    double overlap = 0.5;
    Window window = Window::hann;

    Eigen::Index hop() const;
    Eigen::Index segment_count(Eigen::Index samples) const;

    /// W = (1/L) sum_t w(t)^2.
    double window_energy() const;

    /// Throws ConfigError for L < 2, overlap outside [0, 1) or L > samples.
    void validate(Eigen::Index samples) const;
};

/// Frequency-indexed family of complex rows x cols matrices S(f), f = 0..L-1.
/// Auto-spectra are square and Hermitian; cross-spectra between two
/// different processes may be rectangular.
class CrossSpectrum {
public:
    CrossSpectrum(Eigen::Index rows, Eigen::Index cols, Eigen::Index bins);
    explicit CrossSpectrum(std::vector<Eigen::MatrixXcd> matrices);

    Eigen::Index rows() const noexcept { return rows_; }
    Eigen::Index cols() const noexcept { return cols_; }
    Eigen::Index bins() const noexcept { return static_cast<Eigen::Index>(matrices_.size()); }

    const Eigen::MatrixXcd& operator[](Eigen::Index f) const { return matrices_[static_cast<std::size_t>(f)]; }
    Eigen::MatrixXcd& operator[](Eigen::Index f) { return matrices_[static_cast<std::size_t>(f)]; }

    /// Column-stacked view of S(f): element j + k * rows equals S_{j,k}(f).
    Eigen::VectorXcd vectorized(Eigen::Index f) const;

    const std::vector<Eigen::MatrixXcd>& matrices() const noexcept { return matrices_; }

private:
    Eigen::Index rows_;
    Eigen::Index cols_;
    std::vector<Eigen::MatrixXcd> matrices_;
};

/// Welch estimate S(f) = L / (P W) sum_p a_p(f) a_p(f)^H, where a_p is the DFT
/// of the windowed p-th segment normalized by 1/L.
CrossSpectrum welch_cross_spectrum(const TimeSeriesEnsemble& x, const WelchConfig& cfg);
CrossSpectrum welch_cross_spectrum(const Eigen::MatrixXd& x, const WelchConfig& cfg);

/// Mixed estimate L / (P W) sum_p a_p(f) b_p(f)^H, dim_a x dim_b.
CrossSpectrum cross_spectrum_between(const TimeSeriesEnsemble& a,
                                     const TimeSeriesEnsemble& b,
                                     const WelchConfig& cfg);
CrossSpectrum cross_spectrum_between(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& b,
                                     const WelchConfig& cfg);

/// Population spectrum of white noise: variance * I at every bin.
CrossSpectrum theoretical_white_spectrum(Eigen::Index dim, double variance, Eigen::Index bins);

/// A S(f) B^t at every bin (A is p x rows, B is q x cols).
CrossSpectrum sandwich(const Eigen::MatrixXd& a, const CrossSpectrum& s, const Eigen::MatrixXd& b);

/// CSV rows (f, j, k, re, im) with a header line.
void write_csv(std::ostream& out, const CrossSpectrum& s);

} // namespace crossreg
