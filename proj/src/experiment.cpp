#include "crossreg/experiment.hpp"

#include "crossreg/errors.hpp"
#include "crossreg/io.hpp"
#include "crossreg/regularizers.hpp"
#include "crossreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace crossreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
}

void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> known) {
    if (!obj.is_object()) {
        field_error(prefix.empty() ? "<root>" : prefix, "must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            field_error(prefix.empty() ? key : prefix + "." + key, "unknown field");
        }
    }
}

template <class T>
void read(const json& obj, const char* key, const std::string& field, T& dst) {
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception&) {
        field_error(field, "has the wrong type");
    }
}

std::vector<double> unique_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

void ensure_output(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
}

} // namespace

std::vector<ForwardModel> random_models(const ModelBattery& battery) {
    std::vector<ForwardModel> models;
    models.reserve(static_cast<std::size_t>(battery.count));
    std::mt19937_64 engine(splitmix64(battery.seed));
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); };
    auto integer = [&](Eigen::Index lo, Eigen::Index hi) {
        return std::uniform_int_distribution<Eigen::Index>(lo, hi)(engine);
    };
    for (Eigen::Index k = 0; k < battery.count; ++k) {
        SyntheticSpec spec;
        spec.sensors = integer(battery.min_sensors, battery.max_sensors);
        spec.sources = integer(spec.sensors, std::max(spec.sensors, battery.max_sources));
        spec.seed = child_seed(battery.seed, static_cast<std::uint64_t>(k));
        if (k % 2 == 0) {
            spec.decay = GeometricDecay{std::exp(uniform(std::log(0.5), std::log(10.0))), uniform(0.5, 0.95)};
        } else {
            for (Eigen::Index i = 0; i < spec.sensors; ++i) {
                spec.sigma.push_back(std::exp(uniform(std::log(0.05), std::log(10.0))));
            }
            std::sort(spec.sigma.begin(), spec.sigma.end(), std::greater<>());
        }
        models.push_back(synthesize(spec));
    }
    return models;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
    ExperimentConfig cfg;
    reject_unknown(j, "", {"model", "omega2", "alpha2", "samples", "seed", "replications", "welch", "search", "target",
                           "filter_factors", "battery", "output"});

    if (j.contains("model")) {
        const json& m = j.at("model");
        reject_unknown(m, "model", {"sensors", "sources", "sigma", "geometric", "seed", "matrix_file"});
        if (m.contains("matrix_file")) {
            std::string file;
            read(m, "matrix_file", "model.matrix_file", file);
            fs::path p(file);
            cfg.matrix_file = p.is_absolute() ? p : base_dir / p;
        }
        read(m, "sensors", "model.sensors", cfg.synthetic.sensors);
        read(m, "sources", "model.sources", cfg.synthetic.sources);
        read(m, "seed", "model.seed", cfg.synthetic.seed);
        if (m.contains("sigma")) {
            read(m, "sigma", "model.sigma", cfg.synthetic.sigma);
            cfg.synthetic.decay.reset();
        }
        if (m.contains("geometric")) {
            const json& g = m.at("geometric");
            reject_unknown(g, "model.geometric", {"first", "ratio"});
            GeometricDecay decay;
            read(g, "first", "model.geometric.first", decay.first);
            read(g, "ratio", "model.geometric.ratio", decay.ratio);
            cfg.synthetic.decay = decay;
            cfg.synthetic.sigma.clear();
        }
    }
    read(j, "omega2", "omega2", cfg.omega2);
    read(j, "alpha2", "alpha2", cfg.alpha2);
    read(j, "samples", "samples", cfg.samples);
    read(j, "seed", "seed", cfg.seed);
    read(j, "replications", "replications", cfg.replications);

    if (j.contains("welch")) {
        const json& w = j.at("welch");
        reject_unknown(w, "welch", {"segment_length", "overlap", "window"});
        read(w, "segment_length", "welch.segment_length", cfg.welch.segment_length);
        read(w, "overlap", "welch.overlap", cfg.welch.overlap);
        if (w.contains("window")) {
            std::string name;
            read(w, "window", "welch.window", name);
            try {
                cfg.welch.window = parse_window(name);
            } catch (const ConfigError&) {
                field_error("welch.window", "unknown window '" + name + "'");
            }
        }
    }
    if (j.contains("search")) {
        const json& s = j.at("search");
        reject_unknown(s, "search", {"grid_points", "lower_ratio", "upper_ratio", "rel_tol"});
        read(s, "grid_points", "search.grid_points", cfg.search.grid_points);
        read(s, "lower_ratio", "search.lower_ratio", cfg.search.lower_ratio);
        read(s, "upper_ratio", "search.upper_ratio", cfg.search.upper_ratio);
        read(s, "rel_tol", "search.rel_tol", cfg.search.rel_tol);
    }
    if (j.contains("target")) {
        std::string name;
        read(j, "target", "target", name);
        if (name == "population") {
            cfg.target = SpectrumTarget::population;
        } else if (name == "welch") {
            cfg.target = SpectrumTarget::welch;
        } else {
            field_error("target", "must be 'population' or 'welch'");
        }
    }
    if (j.contains("filter_factors")) {
        const json& f = j.at("filter_factors");
        reject_unknown(f, "filter_factors", {"tsvd_lambdas", "tsvd_thresholds", "tikhonov_lambdas"});
        read(f, "tsvd_lambdas", "filter_factors.tsvd_lambdas", cfg.filters.tsvd_lambdas);
        read(f, "tsvd_thresholds", "filter_factors.tsvd_thresholds", cfg.filters.tsvd_thresholds);
        read(f, "tikhonov_lambdas", "filter_factors.tikhonov_lambdas", cfg.filters.tikhonov_lambdas);
    }
    if (j.contains("battery")) {
        const json& b = j.at("battery");
        reject_unknown(b, "battery", {"count", "min_sensors", "max_sensors", "max_sources", "noise_ratios", "seed"});
        read(b, "count", "battery.count", cfg.battery.count);
        read(b, "min_sensors", "battery.min_sensors", cfg.battery.min_sensors);
        read(b, "max_sensors", "battery.max_sensors", cfg.battery.max_sensors);
        read(b, "max_sources", "battery.max_sources", cfg.battery.max_sources);
        read(b, "noise_ratios", "battery.noise_ratios", cfg.battery.noise_ratios);
        read(b, "seed", "battery.seed", cfg.battery.seed);
    }
    if (j.contains("output")) {
        std::string out;
        read(j, "output", "output", out);
        cfg.output = out;
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse config file '" + path.string() + "': " + e.what());
    }
    return from_json(j, path.parent_path());
}

void ExperimentConfig::validate() const {
    if (matrix_file) {
        if (!fs::exists(*matrix_file)) {
            field_error("model.matrix_file", "file '" + matrix_file->string() + "' does not exist");
        }
    } else {
        if (synthetic.sensors < 1) field_error("model.sensors", "must be >= 1");
        if (synthetic.sources < synthetic.sensors) field_error("model.sources", "must be >= model.sensors");
        if (!synthetic.sigma.empty()) {
            if (static_cast<Eigen::Index>(synthetic.sigma.size()) != synthetic.sensors) {
                field_error("model.sigma", "must list exactly model.sensors values");
            }
            for (double s : synthetic.sigma) {
                if (!(s > 0.0) || !std::isfinite(s)) field_error("model.sigma", "values must be positive and finite");
            }
        } else if (synthetic.decay) {
            if (!(synthetic.decay->first > 0.0) || !std::isfinite(synthetic.decay->first)) {
                field_error("model.geometric.first", "must be positive");
            }
            if (!(synthetic.decay->ratio > 0.0 && synthetic.decay->ratio < 1.0)) {
                field_error("model.geometric.ratio", "must lie in (0, 1)");
            }
        } else {
            field_error("model", "needs sigma, geometric or matrix_file");
        }
    }
    if (!(omega2 > 0.0) || !std::isfinite(omega2)) field_error("omega2", "must be positive and finite");
    if (!(alpha2 >= 0.0) || !std::isfinite(alpha2)) field_error("alpha2", "must be non-negative and finite");
    if (samples < 1) field_error("samples", "must be >= 1");
    if (replications < 0) field_error("replications", "must be >= 0");
    if (welch.segment_length < 2) field_error("welch.segment_length", "must be >= 2");
    if (!(welch.overlap >= 0.0 && welch.overlap < 1.0)) field_error("welch.overlap", "must lie in [0, 1)");
    if (welch.segment_length > samples) field_error("welch.segment_length", "must not exceed samples");
    if (search.grid_points < 2) field_error("search.grid_points", "must be >= 2");
    if (!(search.lower_ratio > 0.0)) field_error("search.lower_ratio", "must be positive");
    if (!(search.upper_ratio > search.lower_ratio)) field_error("search.upper_ratio", "must exceed lower_ratio");
    if (!(search.rel_tol > 0.0 && search.rel_tol < 1.0)) field_error("search.rel_tol", "must lie in (0, 1)");
    for (double l : filters.tsvd_lambdas) {
        if (!(l >= 1.0) || l != std::floor(l)) field_error("filter_factors.tsvd_lambdas", "values must be integers >= 1");
    }
    for (double l : filters.tsvd_thresholds) {
        if (!(l > 0.0) || !std::isfinite(l)) field_error("filter_factors.tsvd_thresholds", "values must be positive");
    }
    for (double l : filters.tikhonov_lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) field_error("filter_factors.tikhonov_lambdas", "values must be >= 0");
    }
    if (battery.count < 0) field_error("battery.count", "must be >= 0");
    if (battery.min_sensors < 1) field_error("battery.min_sensors", "must be >= 1");
    if (battery.max_sensors < battery.min_sensors) field_error("battery.max_sensors", "must be >= battery.min_sensors");
    if (battery.max_sources < battery.max_sensors) field_error("battery.max_sources", "must be >= battery.max_sensors");
    for (double r : battery.noise_ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) field_error("battery.noise_ratios", "values must be positive");
    }
}

ForwardModel ExperimentConfig::build_model() const {
    if (matrix_file) {
        return load_model(*matrix_file);
    }
    return synthesize(synthetic);
}

WhiteNoiseScenario ExperimentConfig::scenario(const ForwardModel& model) const {
    WhiteNoiseScenario s{model, omega2, alpha2, samples, welch, seed, replications, search};
    s.validate();
    return s;
}

FilterTableConfig resolve_filter_tables(const FilterTableConfig& requested, const ForwardModel& model) {
    const Eigen::Index m = model.sensors();
    std::vector<double> counts;
    for (Eigen::Index q = 1; q <= 3; ++q) {
        counts.push_back(static_cast<double>(std::max<Eigen::Index>(1, (q * m) / 4)));
    }
    counts = unique_sorted(counts);
    auto squares = [&](const std::vector<double>& ks) {
        std::vector<double> out;
        for (double k : ks) {
            const double s = model.sigma()(static_cast<Eigen::Index>(k) - 1);
            out.push_back(s * s);
        }
        return unique_sorted(out);
    };
    FilterTableConfig out = requested;
    if (out.tsvd_lambdas.empty()) out.tsvd_lambdas = counts;
    if (out.tsvd_thresholds.empty()) out.tsvd_thresholds = squares(counts);
    if (out.tikhonov_lambdas.empty()) out.tikhonov_lambdas = squares(counts);
    for (double l : out.tsvd_lambdas) {
        if (l > static_cast<double>(m)) field_error("filter_factors.tsvd_lambdas", "values must not exceed model.sensors");
    }
    return out;
}

int cmd_simulate(const ExperimentConfig& cfg) {
    const ForwardModel model = cfg.build_model();
    const Realization real = simulate_realization(model, cfg.omega2, cfg.alpha2, cfg.samples, cfg.seed, 0);
    const TimeSeriesEnsemble x(real.x, SeriesLabel::source);
    const TimeSeriesEnsemble n(real.n, SeriesLabel::noise);
    const TimeSeriesEnsemble y = forward_measure(model, x, n);

    ensure_output(cfg.output);
    json files = json::object();
    for (const auto* series : {&x, &n, &y}) {
        std::ostringstream text;
        write_csv(text, *series);
        const std::string name = series == &x ? "x.csv" : series == &n ? "n.csv" : "y.csv";
        write_text_file(cfg.output / name, text.str());
        files[name] = {{"label", std::string(to_string(series->label()))},
                       {"rows", series->samples()},
                       {"columns", series->dim()},
                       {"fnv1a64", fnv1a_hex(text.str())}};
    }
    save_model(cfg.output / "model.txt", model);

    const json manifest = {{"command", "simulate"},
                           {"seed", cfg.seed},
                           {"omega2", cfg.omega2},
                           {"alpha2", cfg.alpha2},
                           {"samples", cfg.samples},
                           {"sensors", model.sensors()},
                           {"sources", model.sources()},
                           {"files", files}};
    write_text_file(cfg.output / "manifest.json", manifest.dump(2) + "\n");
    return exit_ok;
}

int cmd_error_curves(const ExperimentConfig& cfg) {
    const ForwardModel model = cfg.build_model();
    WhiteNoiseScenario scenario = cfg.scenario(model);
    if (scenario.replications < 1) {
        field_error("replications", "error-curves needs at least one replication");
    }
    std::vector<EmpiricalErrorEvaluator> evaluators;
    for (Eigen::Index r = 0; r < scenario.replications; ++r) {
        const Realization real = simulate_realization(model, cfg.omega2, cfg.alpha2, cfg.samples, cfg.seed,
                                                      static_cast<std::uint64_t>(r));
        evaluators.emplace_back(model, real.x, real.n, cfg.welch, cfg.omega2);
    }

    const double scale = cfg.alpha2 > 0.0 ? cfg.alpha2 / cfg.omega2 : 1.0;
    std::vector<double> svd_grid;
    for (Eigen::Index k = 1; k <= model.sensors(); ++k) svd_grid.push_back(static_cast<double>(k));
    // The grid also carries alpha2 / omega2 so the closed-form signal curve
    // attains its minimum on a grid point.
    std::vector<double> tik_grid = tikhonov_grid(scale, cfg.search);
    if (cfg.alpha2 > 0.0) {
        tik_grid.push_back(scale);
        tik_grid = unique_sorted(std::move(tik_grid));
    }
    const double samples = static_cast<double>(cfg.samples);
    const double bins = static_cast<double>(cfg.welch.segment_length);

    std::vector<ErrorCurve> curves;
    json summary = json::array();
    for (Method method : {Method::tsvd, Method::tikhonov}) {
        const auto& grid = method == Method::tsvd ? svd_grid : tik_grid;
        auto filter_at = [method](double l) { return method == Method::tsvd ? FilterSpec::tsvd(l) : FilterSpec::tikhonov(l); };
        const EmpiricalCurves emp = empirical_curves(evaluators, method, grid, model, cfg.target, cfg.search.rel_tol);
        const ErrorCurve cx = make_curve(method, ErrorKind::signal, ErrorSource::analytic_white_closed_form, grid, [&](double l) {
            return closed_form_error_x_white(model, filter_at(l), cfg.omega2, cfg.alpha2, samples).total();
        });
        const ErrorCurve cs = make_curve(method, ErrorKind::spectrum, ErrorSource::analytic_white_closed_form, grid, [&](double l) {
            return closed_form_error_s_white(model, filter_at(l), cfg.omega2, cfg.alpha2, bins).total();
        });
        curves.push_back(emp.signal);
        curves.push_back(cx);
        curves.push_back(emp.spectrum);
        curves.push_back(cs);

        auto entry = [&](const ErrorCurve& c, double refined) {
            return json{{"method", std::string(to_string(c.method))},
                        {"kind", std::string(to_string(c.kind))},
                        {"source", std::string(to_string(c.source))},
                        {"grid_argmin", c.argmin_lambda()},
                        {"grid_min", c.min_value()},
                        {"argmin", refined}};
        };
        summary.push_back(entry(emp.signal, emp.signal_optimum));
        summary.push_back(entry(emp.spectrum, emp.spectrum_optimum));
        if (method == Method::tsvd) {
            summary.push_back(entry(cx, cx.argmin_lambda()));
            summary.push_back(entry(cs, cs.argmin_lambda()));
        } else {
            auto refine = [&](ErrorKind kind) {
                if (cfg.alpha2 == 0.0) return 0.0;
                return find_optimal_continuous(
                           [&](double l) {
                               return kind == ErrorKind::signal
                                          ? closed_form_error_x_white(model, FilterSpec::tikhonov(l), cfg.omega2, cfg.alpha2, samples).total()
                                          : closed_form_error_s_white(model, FilterSpec::tikhonov(l), cfg.omega2, cfg.alpha2, bins).total();
                           },
                           scale, cfg.search)
                    .lambda;
            };
            summary.push_back(entry(cx, refine(ErrorKind::signal)));
            summary.push_back(entry(cs, refine(ErrorKind::spectrum)));
        }
    }

    ensure_output(cfg.output);
    std::ostringstream csv;
    write_csv(csv, curves);
    write_text_file(cfg.output / "error_curves.csv", csv.str());
    const json doc = {{"command", "error-curves"},
                      {"seed", cfg.seed},
                      {"replications", cfg.replications},
                      {"samples", cfg.samples},
                      {"target", std::string(to_string(cfg.target))},
                      {"expected_tikhonov_lambda_x", cfg.alpha2 / cfg.omega2},
                      {"curves", summary}};
    write_text_file(cfg.output / "error_curves_summary.json", doc.dump(2) + "\n");
    return exit_ok;
}

int cmd_verify_theorems(const ExperimentConfig& cfg) {
    const ForwardModel model = cfg.build_model();
    const TheoremReport report = verify_theorems(cfg.scenario(model));

    json battery = json::array();
    std::size_t violations = 0;
    const auto models = random_models(cfg.battery);
    for (const auto& m : models) {
        for (double ratio : cfg.battery.noise_ratios) {
            const ClosedFormCheck check = check_closed_form(m, 1.0, ratio, cfg.search);
            violations += !check.passed();
            battery.push_back(to_json(check));
        }
    }
    const bool passed = report.closed_form_passed() && violations == 0;
    const json doc = {{"command", "verify-theorems"},
                      {"seed", cfg.seed},
                      {"scenario", to_json(report)},
                      {"battery", {{"models", models.size()}, {"checks", battery.size()}, {"violations", violations},
                                   {"results", battery}}},
                      {"passed", passed}};
    ensure_output(cfg.output);
    write_text_file(cfg.output / "verify_theorems.json", doc.dump(2) + "\n");
    return passed ? exit_ok : exit_check_failed;
}

int cmd_filter_factors(const ExperimentConfig& cfg) {
    const ForwardModel model = cfg.build_model();
    const FilterTableConfig tables = resolve_filter_tables(cfg.filters, model);
    ensure_output(cfg.output);

    struct Job {
        Approach approach;
        Method method;
        const std::vector<double>* lambdas;
    };
    const Job jobs[] = {{Approach::two_step, Method::tsvd, &tables.tsvd_lambdas},
                        {Approach::one_step, Method::tsvd, &tables.tsvd_thresholds},
                        {Approach::two_step, Method::tikhonov, &tables.tikhonov_lambdas},
                        {Approach::one_step, Method::tikhonov, &tables.tikhonov_lambdas}};
    json summary = json::array();
    for (const Job& job : jobs) {
        std::ostringstream csv;
        bool header = true;
        for (double lambda : *job.lambdas) {
            const FilterSpec filter = job.method == Method::tsvd ? FilterSpec::tsvd(lambda) : FilterSpec::tikhonov(lambda);
            const auto table = pair_filter_table(model, filter, job.approach);
            write_pair_filter_csv(csv, table, filter, job.approach, header);
            header = false;
            const auto witness = find_jitter_witness(table);
            json item = {{"approach", std::string(to_string(job.approach))},
                         {"method", std::string(to_string(job.method))},
                         {"lambda", lambda},
                         {"monotone_in_product", is_monotone_in_product(table)},
                         {"jitter_witness", nullptr}};
            if (witness) {
                item["jitter_witness"] = {{"lower", {{"i", witness->lower.i}, {"j", witness->lower.j},
                                                     {"sigma_product", witness->lower.sigma_product},
                                                     {"factor", witness->lower.factor}}},
                                          {"higher", {{"i", witness->higher.i}, {"j", witness->higher.j},
                                                      {"sigma_product", witness->higher.sigma_product},
                                                      {"factor", witness->higher.factor}}}};
            }
            summary.push_back(item);
        }
        const std::string name = "filter_factors_" + std::string(to_string(job.approach)) + "_" +
                                 std::string(to_string(job.method)) + ".csv";
        write_text_file(cfg.output / name, csv.str());
    }
    const json doc = {{"command", "filter-factors"},
                      {"sensors", model.sensors()},
                      {"sources", model.sources()},
                      {"tables", summary}};
    write_text_file(cfg.output / "filter_factors_summary.json", doc.dump(2) + "\n");
    return exit_ok;
}

} // namespace crossreg
