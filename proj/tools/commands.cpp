#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "clickstat/descriptors.hpp"
#include "clickstat/dynamics.hpp"
#include "clickstat/sampler.hpp"

namespace clickstat::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::vector<std::string> states;
    std::vector<std::string> detectors;
    std::string grid;
    std::string out;
    std::string format;
    std::string histogram;
    std::string report;
    std::string figure;
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;
    unsigned resamples = 200;
    double threshold_sigmas = kDefaultThresholdSigmas;
    unsigned precision = 128;
    bool dimensionless = false;
    bool witness = false;
};

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x + 0.0);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

// Inline JSON or a path to a JSON file.
json load_json(const std::string& arg) {
    const auto first = arg.find_first_not_of(" \t\r\n");
    const std::string text = first != std::string::npos && arg[first] == '{' ? arg : read_file(arg);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
    }
}

void write_output(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& fn) {
    if (path.empty() || path == "-") {
        fn(fallback);
        return;
    }
    std::ofstream file(path);
    if (!file) throw ConfigError("cannot write '" + path + "'");
    fn(file);
}

std::string output_format(const Options& opt, const std::string& fallback) {
    const std::string f = opt.format.empty() ? fallback : opt.format;
    if (f != "csv" && f != "json") throw ConfigError("format must be csv or json");
    return f;
}

Precision precision_of(const Options& opt) { return Precision{opt.precision, true}; }

// Evaluates fn(i) for i in [0, n) on worker threads; results keep index order.
template <class Fn>
auto parallel_map(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
    std::vector<decltype(fn(std::size_t{}))> results(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                results[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

struct Problem {
    StateDescriptor state;
    std::vector<DetectorConfig> detectors;
};

std::vector<DetectorConfig> load_detectors(const Options& opt, bool joint) {
    if (opt.detectors.empty()) throw ConfigError("--detector is required");
    std::vector<DetectorConfig> dets;
    for (const auto& d : opt.detectors) dets.push_back(parse_detector(load_json(d)));
    if (joint && dets.size() == 1) dets.push_back(dets[0]);
    if (dets.size() != (joint ? 2u : 1u)) {
        throw ConfigError(joint ? "two-mode states take one or two detectors" : "single-mode states take one detector");
    }
    return dets;
}

Problem load_problem(const Options& opt, const json& state_json) {
    Problem p{parse_state(state_json), {}};
    p.detectors = load_detectors(opt, is_joint(p.state));
    return p;
}

json single_state_json(const Options& opt) {
    if (opt.states.size() != 1) throw ConfigError("exactly one --state is required");
    return load_json(opt.states[0]);
}

struct Statistics {
    std::optional<ClickStatistics> single;
    std::optional<JointClickStatistics> joint;
};

Statistics compute(const Problem& p, const Precision& precision) {
    Statistics s;
    if (const auto* j = std::get_if<JointPhotonDistribution>(&p.state)) {
        s.joint = joint_click_statistics(*j, p.detectors[0], p.detectors[1], precision);
    } else {
        s.single = single_mode_statistics(p.state, p.detectors[0], precision);
    }
    return s;
}

void write_stats_csv(std::ostream& os, const Statistics& s) {
    if (s.single) {
        os << "k,c\n";
        for (unsigned k = 0; k <= s.single->diodes; ++k) os << k << ',' << fmt(s.single->probs[k]) << '\n';
    } else {
        os << "k1,k2,c\n";
        for (unsigned k1 = 0; k1 <= s.joint->diodes1; ++k1) {
            for (unsigned k2 = 0; k2 <= s.joint->diodes2; ++k2) {
                os << k1 << ',' << k2 << ',' << fmt(s.joint->at(k1, k2)) << '\n';
            }
        }
    }
}

WitnessReport report_of(const Statistics& s) {
    return s.single ? witness_report(*s.single) : witness_report(*s.joint);
}

// ---- stats ----------------------------------------------------------------

int cmd_stats(const Options& opt, std::ostream& out) {
    const Problem p = load_problem(opt, single_state_json(opt));
    const Statistics s = compute(p, precision_of(opt));
    const std::string format = output_format(opt, "csv");
    write_output(opt.out, out, [&](std::ostream& os) {
        if (format == "json") {
            os << (s.single ? to_json(*s.single) : to_json(*s.joint)).dump(2) << '\n';
        } else {
            write_stats_csv(os, s);
        }
    });
    return kExitOk;
}

// ---- witness --------------------------------------------------------------

void write_reports_csv(std::ostream& os, const std::string& parameter, const std::vector<double>& xs,
                       const std::vector<WitnessReport>& reports) {
    const std::size_t minors = reports.empty() ? 0 : reports[0].leading_minors.size();
    os << parameter;
    for (std::size_t i = 1; i <= minors; ++i) os << ",minor" << i;
    os << ",min_eigenvalue,qb,cross_minor,verdict\n";
    for (std::size_t r = 0; r < reports.size(); ++r) {
        const auto& rep = reports[r];
        os << fmt(xs[r]);
        for (double m : rep.leading_minors) os << ',' << fmt(m);
        os << ',' << fmt(rep.min_eigenvalue) << ',' << (rep.qb ? fmt(*rep.qb) : "") << ','
           << (rep.cross_minor ? fmt(*rep.cross_minor) : "") << ',' << to_string(rep.verdict) << '\n';
    }
}

int cmd_witness(const Options& opt, std::ostream& out) {
    if (!opt.histogram.empty()) {
        if (!opt.states.empty()) throw ConfigError("--histogram and --state are mutually exclusive");
        std::ifstream in(opt.histogram);
        if (!in) throw ConfigError("cannot open '" + opt.histogram + "'");
        const ClickHistogram hist = read_histogram_csv(in);
        const WitnessReport report = bootstrap_witness(hist, opt.resamples, RngSeed{opt.seed}, opt.threshold_sigmas);
        write_output(opt.out, out, [&](std::ostream& os) { os << to_json(report).dump(2) << '\n'; });
        return kExitOk;
    }
    const json base = single_state_json(opt);
    if (opt.grid.empty()) {
        const Problem p = load_problem(opt, base);
        const WitnessReport report = report_of(compute(p, precision_of(opt)));
        write_output(opt.out, out, [&](std::ostream& os) { os << to_json(report).dump(2) << '\n'; });
        return kExitOk;
    }
    const GridSpec grid = parse_grid(opt.grid);
    const std::vector<double> xs = grid.points();
    const std::vector<DetectorConfig> dets = load_detectors(opt, is_joint(parse_state(base)));
    const Precision precision = precision_of(opt);
    const auto reports = parallel_map(xs.size(), [&](std::size_t i) {
        json j = base;
        j[grid.parameter] = xs[i];
        return report_of(compute(Problem{parse_state(j), dets}, precision));
    });
    const std::string format = output_format(opt, "csv");
    write_output(opt.out, out, [&](std::ostream& os) {
        if (format == "json") {
            json rows = json::array();
            for (std::size_t i = 0; i < xs.size(); ++i) {
                json row = to_json(reports[i]);
                row[grid.parameter] = xs[i];
                rows.push_back(row);
            }
            os << rows.dump(2) << '\n';
        } else {
            write_reports_csv(os, grid.parameter, xs, reports);
        }
    });
    return kExitOk;
}

// ---- sample ---------------------------------------------------------------

int cmd_sample(const Options& opt, std::ostream& out) {
    if (opt.samples < 1) throw Error(ErrorCode::InvalidArgument, "--samples must be at least 1");
    const Problem p = load_problem(opt, single_state_json(opt));
    const Statistics s = compute(p, precision_of(opt));
    const ClickHistogram hist = s.single ? sample_clicks(*s.single, opt.samples, RngSeed{opt.seed})
                                         : sample_clicks(*s.joint, opt.samples, RngSeed{opt.seed});
    write_output(opt.out, out, [&](std::ostream& os) { write_histogram_csv(os, hist); });
    if (opt.witness) {
        // Resampling draws from a stream distinct from the sampling stream.
        const WitnessReport report =
            bootstrap_witness(hist, opt.resamples, RngSeed{opt.seed ^ 0x9e3779b97f4a7c15ULL}, opt.threshold_sigmas);
        write_output(opt.report, out, [&](std::ostream& os) { os << to_json(report).dump(2) << '\n'; });
    }
    return kExitOk;
}

// ---- figures --------------------------------------------------------------

std::vector<double> figure_points(const Options& opt, const std::string& parameter, std::vector<double> defaults) {
    if (opt.grid.empty()) return defaults;
    const GridSpec grid = parse_grid(opt.grid);
    if (grid.parameter != parameter) throw ConfigError("this figure sweeps '" + parameter + "'");
    return grid.points();
}

void write_table(const fs::path& path, const std::string& header, const std::vector<std::vector<double>>& rows) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write '" + path.string() + "'");
    os << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
        os << '\n';
    }
}

void figure2(const Options& opt, const fs::path& dir) {
    std::vector<double> defaults;
    for (int i = 0; i <= 300; ++i) defaults.push_back(i / 100.0);
    const auto xs = figure_points(opt, "nbar", defaults);
    const DetectorConfig det{8, LinearResponse{0.9}};
    const double scale[] = {1e2, 1e5, 1e8, 1e13};
    const auto rows = parallel_map(xs.size(), [&](std::size_t i) {
        const auto minors = leading_principal_minors(
            moment_matrix(pi_moments(click_statistics(spats_distribution(xs[i]), det, precision_of(opt))), 8));
        std::vector<double> row{xs[i]};
        for (int k = 1; k <= 4; ++k) row.push_back(minors[k]);
        for (int k = 1; k <= 4; ++k) row.push_back(minors[k] * scale[k - 1]);
        return row;
    });
    write_table(dir / "fig2.csv",
                "nbar,minor2,minor3,minor4,minor5,display_minor2_x1e2,display_minor3_x1e5,display_minor4_x1e8,"
                "display_minor5_x1e13",
                rows);
}

void figure3(const Options& opt, const fs::path& dir) {
    std::vector<double> defaults;
    for (int i = 1; i <= 199; ++i) defaults.push_back(i / 200.0);
    const auto xs = figure_points(opt, "xi_abs2", defaults);
    const DetectorConfig det{4, LinearResponse{0.8}};
    const auto rows = parallel_map(xs.size(), [&](std::size_t i) {
        const double minor = cross_correlation_minor(
            joint_click_statistics(tmsv_joint(std::sqrt(xs[i])), det, det, precision_of(opt)));
        return std::vector<double>{xs[i], minor, minor * 1e3};
    });
    write_table(dir / "fig3.csv", "xi_abs2,cross_minor,display_cross_minor_x1e3", rows);
}

void figure4(const Options& opt, const fs::path& dir) {
    const DecayModel model{1.0, 1.0, 2};
    std::vector<std::vector<double>> rows;
    for (int i = 0; i <= 60; ++i) {
        for (int j = 0; j <= 60; ++j) {
            const double t = 0.05 * i;
            const double dt = 0.05 * j;
            rows.push_back({t, dt, b_function(model, t, dt), decay_minor(model, t, dt)});
        }
    }
    write_table(dir / "fig4.csv", opt.dimensionless ? "gamma_t,gamma_dt,b,decay_minor" : "t,dt,b,decay_minor",
                rows);
}

void figure5(const Options& opt, const fs::path& dir) {
    struct Panel {
        const char* file;
        ResponseFunction response;
    };
    const Panel panels[] = {
        {"fig5a_linear.csv", LinearResponse{1.0}},
        {"fig5b_affine.csv", AffineResponse{1.0, 2.0}},
        {"fig5c_quadratic.csv", PolynomialResponse{{0.0, 1.0, 0.25}}},
        {"fig5d_two_photon.csv", NPhotonAbsorption{2}},
    };
    const unsigned n = 16;
    const double mu = 4.0;
    for (const auto& panel : panels) {
        const ClickStatistics stats =
            click_statistics(coherent_state(2.0), DetectorConfig{n, panel.response}, precision_of(opt));
        const double p = 1.0 - std::exp(-evaluate_response(panel.response, mu / n));
        const ClickStatistics binomial = binomial_statistics(n, p);
        std::vector<std::vector<double>> rows;
        for (unsigned k = 0; k <= n; ++k) rows.push_back({double(k), stats.probs[k], binomial.probs[k]});
        write_table(dir / panel.file, "k,c,binomial", rows);
    }
}

void figure6(const Options& opt, const fs::path& dir) {
    std::vector<double> defaults;
    for (int i = 1; i <= 201; ++i) defaults.push_back(4.0 * i / 201.0);
    const auto xs = figure_points(opt, "alpha2", defaults);
    const ResponseFunction responses[] = {LinearResponse{1.0}, PowerResponse{3}, NPhotonAbsorption{3}};
    const double scale[] = {1e4, 1e8, 1e9};
    const auto rows = parallel_map(xs.size(), [&](std::size_t i) {
        std::vector<double> row{xs[i]};
        std::vector<double> minors;
        for (const auto& r : responses) {
            const auto m = direct_pi_moments(odd_coherent(std::sqrt(xs[i])), DetectorConfig{8, r}, precision_of(opt));
            minors.push_back(m[2] - m[1] * m[1]);
        }
        row.insert(row.end(), minors.begin(), minors.end());
        for (int k = 0; k < 3; ++k) row.push_back(minors[k] * scale[k]);
        return row;
    });
    write_table(dir / "fig6.csv",
                "alpha2,minor_linear,minor_cubic,minor_nabs3,display_minor_linear_x1e4,display_minor_cubic_x1e8,"
                "display_minor_nabs3_x1e9",
                rows);
}

int cmd_figure(const Options& opt) {
    static const std::map<std::string, void (*)(const Options&, const fs::path&)> figures = {
        {"fig2", figure2}, {"fig3", figure3}, {"fig4", figure4}, {"fig5", figure5}, {"fig6", figure6}};
    const auto it = figures.find(opt.figure);
    if (it == figures.end()) throw ConfigError("unknown figure '" + opt.figure + "'");
    const fs::path dir = opt.out.empty() ? fs::path(".") : fs::path(opt.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create '" + dir.string() + "': " + ec.message());
    it->second(opt, dir);
    return kExitOk;
}

} // namespace

std::vector<double> GridSpec::points() const {
    std::vector<double> xs;
    if (steps == 1) return {start};
    for (unsigned i = 0; i < steps; ++i) xs.push_back(start + (stop - start) * i / (steps - 1));
    return xs;
}

GridSpec parse_grid(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("grid must look like param=start:stop:steps");
    GridSpec g;
    g.parameter = text.substr(0, eq);
    std::istringstream rest(text.substr(eq + 1));
    std::string a, b, c;
    if (!std::getline(rest, a, ':') || !std::getline(rest, b, ':') || !std::getline(rest, c)) {
        throw ConfigError("grid must look like param=start:stop:steps");
    }
    try {
        std::size_t used = 0;
        g.start = std::stod(a, &used);
        if (used != a.size()) throw std::invalid_argument(a);
        g.stop = std::stod(b, &used);
        if (used != b.size()) throw std::invalid_argument(b);
        const long steps = std::stol(c, &used);
        if (used != c.size() || steps < 1) throw std::invalid_argument(c);
        g.steps = static_cast<unsigned>(steps);
    } catch (const std::exception&) {
        throw ConfigError("bad grid '" + text + "'");
    }
    return g;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Click-counting statistics and nonclassicality witnesses", "clickstat"};
    app.require_subcommand(1);
    Options opt;

    auto add_state = [&](CLI::App* sub) {
        sub->add_option("--state", opt.states, "State descriptor (inline JSON or file)");
        sub->add_option("--detector", opt.detectors, "Detector descriptor; repeat for two banks");
        sub->add_option("--precision", opt.precision, "Working precision in bits")->check(CLI::Range(53u, 1024u));
    };
    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", opt.out, "Output path (stdout by default)");
        sub->add_option("--format", opt.format, "csv or json");
    };
    auto add_bootstrap = [&](CLI::App* sub) {
        sub->add_option("--seed", opt.seed, "64-bit RNG seed");
        sub->add_option("--resamples", opt.resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);
        sub->add_option("--threshold-sigmas", opt.threshold_sigmas, "Verdict threshold in standard errors");
    };

    CLI::App* stats = app.add_subcommand("stats", "Click-counting statistics of a state");
    add_state(stats);
    add_out(stats);

    CLI::App* witness = app.add_subcommand("witness", "Witness report from a state or a histogram");
    add_state(witness);
    add_out(witness);
    add_bootstrap(witness);
    witness->add_option("--histogram", opt.histogram, "Histogram CSV from measured or sampled data");
    witness->add_option("--grid", opt.grid, "Sweep param=start:stop:steps of the state descriptor");

    CLI::App* figure = app.add_subcommand("figure", "Data tables behind the figures");
    figure->add_option("name", opt.figure, "fig2 | fig3 | fig4 | fig5 | fig6")->required();
    figure->add_option("--out", opt.out, "Output directory");
    figure->add_option("--grid", opt.grid, "Override the swept parameter");
    figure->add_option("--precision", opt.precision, "Working precision in bits")->check(CLI::Range(53u, 1024u));
    figure->add_flag("--dimensionless", opt.dimensionless, "Label times in units of 1/gamma");

    CLI::App* sample = app.add_subcommand("sample", "Simulated click histogram");
    add_state(sample);
    add_bootstrap(sample);
    sample->add_option("--out", opt.out, "Histogram CSV path (stdout by default)");
    sample->add_option("--samples", opt.samples, "Number of measurements")->required();
    sample->add_flag("--witness", opt.witness, "Also run the bootstrap witness");
    sample->add_option("--report", opt.report, "Witness report path (stdout by default)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (stats->parsed()) return cmd_stats(opt, out);
        if (witness->parsed()) return cmd_witness(opt, out);
        if (figure->parsed()) return cmd_figure(opt);
        if (sample->parsed()) return cmd_sample(opt, out);
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return is_numerical(e.code()) ? kExitNumerical : kExitConfig;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}

} // namespace clickstat::cli
