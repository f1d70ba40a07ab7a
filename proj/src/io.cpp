#include "crossreg/io.hpp"

#include "crossreg/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace crossreg {

namespace fs = std::filesystem;

void write_text_file(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

void save_matrix_text(const fs::path& path, const Eigen::MatrixXd& m) {
    std::string text;
    char buf[32];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
            if (c) text += ' ';
            text += buf;
        }
        text += '\n';
    }
    write_text_file(path, text);
}

Eigen::MatrixXd load_matrix_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open matrix file '" + path.string() + "'");
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::vector<double> row;
        std::string token;
        while (fields >> token) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != token.size() || !std::isfinite(value)) {
                std::ostringstream msg;
                msg << path.string() << ":" << line_no << ": invalid number '" << token << "'";
                throw IoError(msg.str());
            }
            row.push_back(value);
        }
        if (row.empty()) {
            continue;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            std::ostringstream msg;
            msg << path.string() << ":" << line_no << ": expected " << rows.front().size() << " columns, found "
                << row.size();
            throw IoError(msg.str());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw IoError("matrix file '" + path.string() + "' is empty");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
    }
    return m;
}

nlohmann::json model_sidecar(const ForwardModel& model) {
    std::vector<double> sigma(model.sigma().data(), model.sigma().data() + model.sigma().size());
    return {{"M", model.sensors()}, {"N", model.sources()}, {"sigma", sigma}};
}

void save_model(const fs::path& path, const ForwardModel& model) {
    save_matrix_text(path, model.matrix());
    write_text_file(fs::path(path.string() + ".json"), model_sidecar(model).dump(2) + "\n");
}

ForwardModel load_model(const fs::path& path) {
    ForwardModel model = ForwardModel::decompose(load_matrix_text(path));
    const fs::path sidecar(path.string() + ".json");
    if (!fs::exists(sidecar)) {
        return model;
    }
    std::ifstream in(sidecar);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse sidecar '" + sidecar.string() + "': " + e.what());
    }
    try {
        const auto m = j.at("M").get<Eigen::Index>();
        const auto n = j.at("N").get<Eigen::Index>();
        const auto sigma = j.at("sigma").get<std::vector<double>>();
        if (m != model.sensors() || n != model.sources() || static_cast<Eigen::Index>(sigma.size()) != m) {
            throw IoError("sidecar '" + sidecar.string() + "' disagrees with the matrix shape");
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            const double expected = sigma[static_cast<std::size_t>(i)];
            if (std::abs(model.sigma()(i) - expected) > 1e-8 * std::abs(expected)) {
                throw IoError("sidecar '" + sidecar.string() + "' lists different singular values");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed sidecar '" + sidecar.string() + "': " + e.what());
    }
    return model;
}

nlohmann::json to_json(const CrossSpectrum& s) {
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (Eigen::Index f = 0; f < s.bins(); ++f) {
        const Eigen::VectorXcd v = s.vectorized(f);
        std::vector<double> r(static_cast<std::size_t>(v.size()));
        std::vector<double> i(static_cast<std::size_t>(v.size()));
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            r[static_cast<std::size_t>(k)] = v(k).real();
            i[static_cast<std::size_t>(k)] = v(k).imag();
        }
        re.push_back(r);
        im.push_back(i);
    }
    return {{"rows", s.rows()}, {"cols", s.cols()}, {"bins", s.bins()}, {"re", re}, {"im", im}};
}

CrossSpectrum cross_spectrum_from_json(const nlohmann::json& j) {
    try {
        const auto rows = j.at("rows").get<Eigen::Index>();
        const auto cols = j.at("cols").get<Eigen::Index>();
        const auto bins = j.at("bins").get<Eigen::Index>();
        const auto re = j.at("re").get<std::vector<std::vector<double>>>();
        const auto im = j.at("im").get<std::vector<std::vector<double>>>();
        if (rows < 1 || cols < 1 || bins < 1 || static_cast<Eigen::Index>(re.size()) != bins ||
            static_cast<Eigen::Index>(im.size()) != bins) {
            throw ShapeError("cross-spectrum JSON has inconsistent sizes");
        }
        std::vector<Eigen::MatrixXcd> mats;
        for (Eigen::Index f = 0; f < bins; ++f) {
            const auto& r = re[static_cast<std::size_t>(f)];
            const auto& i = im[static_cast<std::size_t>(f)];
            if (static_cast<Eigen::Index>(r.size()) != rows * cols || r.size() != i.size()) {
                throw ShapeError("cross-spectrum JSON bin has the wrong length");
            }
            Eigen::MatrixXcd m(rows, cols);
            for (Eigen::Index k = 0; k < rows * cols; ++k) {
                m(k % rows, k / rows) = {r[static_cast<std::size_t>(k)], i[static_cast<std::size_t>(k)]};
            }
            mats.push_back(std::move(m));
        }
        return CrossSpectrum(std::move(mats));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed cross-spectrum JSON: ") + e.what());
    }
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace crossreg
