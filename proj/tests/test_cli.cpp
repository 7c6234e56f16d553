#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clickstat/descriptors.hpp"
#include "commands.hpp"

using namespace clickstat;
using clickstat::cli::run_cli;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::istringstream fields(line);
        std::string f;
        while (std::getline(fields, f, ',')) row.push_back(f);
        rows.push_back(row);
    }
    return rows;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("clickstat_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const std::string kLinear8 = R"({"N":8,"response":{"kind":"linear","eta":0.9}})";

} // namespace

TEST_CASE("stats: single photon table") {
    const auto r = run({"stats", "--state", R"({"kind":"fock","n":1})", "--detector",
                        R"({"N":4,"response":{"kind":"linear","eta":0.5}})"});
    REQUIRE(r.code == 0);
    const auto rows = read_csv(r.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == std::vector<std::string>{"k", "c"});
    const double expected[] = {0.5, 0.5, 0, 0, 0};
    for (int k = 0; k < 5; ++k) {
        CHECK(std::stoi(rows[k + 1][0]) == k);
        CHECK(std::abs(std::stod(rows[k + 1][1]) - expected[k]) < 1e-14);
    }
}

TEST_CASE("stats: coherent alpha = 2 on 16 diodes is binomial") {
    const auto r = run({"stats", "--state", R"({"kind":"coherent","alpha":2})", "--detector", R"({"N":16})"});
    REQUIRE(r.code == 0);
    const auto rows = read_csv(r.out);
    REQUIRE(rows.size() == 18);
    const auto b = binomial_statistics(16, 1 - std::exp(-0.25));
    for (int k = 0; k <= 16; ++k) CHECK(std::abs(std::stod(rows[k + 1][1]) - b.probs[k]) < 1e-10);
}

TEST_CASE("stats: joint table and JSON output") {
    const auto r = run({"stats", "--state", R"({"kind":"tmsv","xi_abs2":0.5})", "--detector",
                        R"({"N":4,"response":{"kind":"linear","eta":0.8}})"});
    REQUIRE(r.code == 0);
    const auto rows = read_csv(r.out);
    CHECK(rows[0] == std::vector<std::string>{"k1", "k2", "c"});
    CHECK(rows.size() == 26);
    CHECK(std::stod(rows[1][2]) == doctest::Approx(0.51020408163265306).epsilon(1e-12));

    const auto j = run({"stats", "--format", "json", "--state", R"({"kind":"fock","n":1})", "--detector", R"({"N":2})"});
    REQUIRE(j.code == 0);
    CHECK(nlohmann::json::parse(j.out)["probs"].size() == 3);
}

TEST_CASE("exit codes") {
    CHECK(run({"stats", "--state", "{bad json", "--detector", R"({"N":4})"}).code == 2);
    CHECK(run({"stats", "--state", R"({"kind":"fock","n":1})"}).code == 2);
    CHECK(run({"stats", "--state", "/nonexistent/state.json", "--detector", R"({"N":4})"}).code == 2);
    CHECK(run({"stats", "--state", R"({"kind":"fock","n":1})", "--detector", R"({"N":4})", "--format", "xml"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"figure", "fig9"}).code == 2);
    CHECK(run({"sample", "--state", R"({"kind":"fock","n":1})", "--detector", kLinear8, "--samples", "0"}).code == 2);
    const auto bad = run({"stats", "--state", R"({"kind":"odd_coherent","alpha":0})", "--detector", R"({"N":4})"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("ZeroAmplitude") != std::string::npos);
}

TEST_CASE("state and detector descriptors from files") {
    const auto dir = scratch("files");
    std::ofstream(dir / "state.json") << R"({"kind":"thermal","nbar":1})";
    std::ofstream(dir / "det.json") << kLinear8;
    const auto r = run({"stats", "--state", (dir / "state.json").string(), "--detector", (dir / "det.json").string(),
                        "--out", (dir / "c.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(read_csv(slurp(dir / "c.csv")).size() == 10);
}

TEST_CASE("witness: exact report") {
    const auto r = run({"witness", "--state", R"({"kind":"fock","n":1})", "--detector", kLinear8});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["verdict"] == "nonclassical");
    CHECK(j["qb"].get<double>() == doctest::Approx(-0.9 * 7 / 7.1).epsilon(1e-12));
    // Verdicts are data: a classical state also exits 0.
    const auto c = run({"witness", "--state", R"({"kind":"coherent","alpha":1})", "--detector", kLinear8});
    CHECK(c.code == 0);
    CHECK(nlohmann::json::parse(c.out)["verdict"] == "consistent-with-classical");
}

TEST_CASE("witness: SPATS grid") {
    const auto r = run({"witness", "--state", R"({"kind":"spats","nbar":0})", "--detector", kLinear8, "--grid",
                        "nbar=0.5:3:6"});
    REQUIRE(r.code == 0);
    const auto rows = read_csv(r.out);
    REQUIRE(rows.size() == 7);
    CHECK(rows[0][0] == "nbar");
    CHECK(rows[0][2] == "minor2");
    CHECK(std::stod(rows[1][0]) == 0.5);
    CHECK(std::stod(rows[1][2]) == doctest::Approx(-0.0066213405924771386).epsilon(1e-9));
    CHECK(std::stod(rows[6][0]) == 3.0);
    CHECK(std::stod(rows[6][3]) == doctest::Approx(-2.896943900564133e-6).epsilon(1e-6));
    CHECK(run({"witness", "--state", R"({"kind":"spats","nbar":0})", "--detector", kLinear8, "--grid", "nbar=1:2"})
              .code == 2);
}

TEST_CASE("witness: TMSV grid as JSON") {
    const auto r = run({"witness", "--state", R"({"kind":"tmsv","xi_abs2":0})", "--detector",
                        R"({"N":4,"response":{"kind":"linear","eta":0.8}})", "--grid", "xi_abs2=0.1:0.9:3", "--format",
                        "json"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j.size() == 3);
    CHECK(j[0]["cross_minor"].get<double>() == doctest::Approx(-2.0444403453802325e-5).epsilon(1e-8));
    for (const auto& row : j) CHECK(row["cross_minor"].get<double>() < 0);
}

TEST_CASE("sample: deterministic histogram feeding the witness") {
    const auto dir = scratch("sample");
    const std::vector<std::string> args = {"sample", "--state", R"({"kind":"fock","n":1})", "--detector", kLinear8,
                                           "--samples", "1000000", "--seed", "42", "--witness", "--resamples", "300"};
    auto a = args;
    a.insert(a.end(), {"--out", (dir / "a.csv").string(), "--report", (dir / "a.json").string()});
    auto b = args;
    b.insert(b.end(), {"--out", (dir / "b.csv").string(), "--report", (dir / "b.json").string()});
    REQUIRE(run(a).code == 0);
    REQUIRE(run(b).code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    CHECK(nlohmann::json::parse(slurp(dir / "a.json"))["verdict"] == "nonclassical");

    const auto w = run({"witness", "--histogram", (dir / "a.csv").string(), "--resamples", "200"});
    REQUIRE(w.code == 0);
    const auto j = nlohmann::json::parse(w.out);
    CHECK(j["verdict"] == "nonclassical");
    CHECK(j.contains("stderr"));
}

TEST_CASE("witness: histogram of coherent data") {
    const auto dir = scratch("coherent");
    REQUIRE(run({"sample", "--state", R"({"kind":"coherent","alpha":1.5})", "--detector", kLinear8, "--samples",
                 "200000", "--seed", "3", "--out", (dir / "h.csv").string()})
                .code == 0);
    const auto w = run({"witness", "--histogram", (dir / "h.csv").string(), "--seed", "4"});
    REQUIRE(w.code == 0);
    CHECK(nlohmann::json::parse(w.out)["verdict"] == "consistent-with-classical");
}

TEST_CASE("figure tables") {
    const auto dir = scratch("figures");
    SUBCASE("fig2 display columns") {
        REQUIRE(run({"figure", "fig2", "--out", dir.string(), "--grid", "nbar=0.5:1:2"}).code == 0);
        const auto rows = read_csv(slurp(dir / "fig2.csv"));
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].size() == 9);
        CHECK(std::stod(rows[1][5]) == doctest::Approx(std::stod(rows[1][1]) * 1e2));
        CHECK(std::stod(rows[1][8]) == doctest::Approx(std::stod(rows[1][4]) * 1e13));
    }
    SUBCASE("fig3 default grid") {
        REQUIRE(run({"figure", "fig3", "--out", dir.string()}).code == 0);
        const auto rows = read_csv(slurp(dir / "fig3.csv"));
        REQUIRE(rows.size() == 200);
        for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][1]) < 0);
    }
    SUBCASE("fig4 surface") {
        REQUIRE(run({"figure", "fig4", "--out", dir.string(), "--dimensionless"}).code == 0);
        const auto rows = read_csv(slurp(dir / "fig4.csv"));
        REQUIRE(rows.size() == 61 * 61 + 1);
        CHECK(rows[0][0] == "gamma_t");
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double b = std::stod(rows[i][2]);
            CHECK(b >= 0);
            CHECK(b < 1);
        }
    }
    SUBCASE("fig5 panels are binomial") {
        REQUIRE(run({"figure", "fig5", "--out", dir.string()}).code == 0);
        for (const char* name : {"fig5a_linear.csv", "fig5b_affine.csv", "fig5c_quadratic.csv", "fig5d_two_photon.csv"}) {
            const auto rows = read_csv(slurp(dir / name));
            REQUIRE(rows.size() == 18);
            for (std::size_t i = 1; i < rows.size(); ++i) {
                CHECK(std::abs(std::stod(rows[i][1]) - std::stod(rows[i][2])) < 1e-10);
            }
        }
    }
    SUBCASE("fig6 negative over the default grid") {
        REQUIRE(run({"figure", "fig6", "--out", dir.string()}).code == 0);
        const auto rows = read_csv(slurp(dir / "fig6.csv"));
        REQUIRE(rows.size() == 202);
        CHECK(std::stod(rows.back()[0]) == doctest::Approx(4.0));
        for (std::size_t i = 1; i < rows.size(); ++i) {
            for (int c = 1; c <= 3; ++c) CHECK(std::stod(rows[i][c]) < 0);
        }
    }
}

TEST_CASE("grid parsing") {
    const auto g = cli::parse_grid("nbar=0:3:301");
    CHECK(g.parameter == "nbar");
    const auto pts = g.points();
    REQUIRE(pts.size() == 301);
    CHECK(pts.front() == 0.0);
    CHECK(pts.back() == 3.0);
    CHECK(pts[100] == doctest::Approx(1.0));
}
