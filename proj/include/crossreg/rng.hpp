#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace crossreg {

/// SplitMix64 finalizer. Used both to seed engines and to derive child seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Independent seed for replication `index` of a run seeded with `seed`:
/// splitmix64(seed ^ splitmix64(index + 0x9E3779B97F4A7C15)).
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Standard normal draws from a mt19937_64 engine via the Box-Muller transform.
///
/// Uniforms are built from the top 53 bits of each engine output, so the
/// stream is fully determined by the seed on every platform.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed);

    double next();

    /// rows x cols matrix of i.i.d. N(0, stddev^2) entries, filled column by column.
    Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);

private:
    double uniform_open();

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace crossreg
