#pragma once

#include "crossreg/forward_model.hpp"
#include "crossreg/spectral.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace crossreg {

/// Plain-text matrix: one row per line, whitespace-separated, 17 significant digits.
void save_matrix_text(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Throws IoError if the file is missing, ragged, empty or holds a non-number.
Eigen::MatrixXd load_matrix_text(const std::filesystem::path& path);

/// Writes G as a text matrix at `path` and {M, N, sigma[]} at `path` + ".json".
void save_model(const std::filesystem::path& path, const ForwardModel& model);

/// Loads and decomposes G; if a sidecar exists its M, N and sigma must agree
/// with the decomposition (sigma to 1e-8 relative).
ForwardModel load_model(const std::filesystem::path& path);

nlohmann::json model_sidecar(const ForwardModel& model);

/// {"rows", "cols", "bins", "re": [[...]], "im": [[...]]} with each bin's
/// matrix column-stacked. Intended for small dimensions.
nlohmann::json to_json(const CrossSpectrum& s);
CrossSpectrum cross_spectrum_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Writes `text` to `path` in binary mode; throws IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace crossreg
