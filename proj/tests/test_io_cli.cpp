#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "obsdesign/cli.hpp"
#include "obsdesign/io.hpp"
#include "obsdesign/rng.hpp"
#include "obsdesign/svg_report.hpp"

using namespace obsdesign;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("obsdesign_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_text(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    write_file_bytes(p, text);
    return p;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

int run_tool(const std::string& args, const std::string& env = "") {
    std::string cmd = env.empty() ? "" : env + " ";
    cmd += q(fs::path(OBSDESIGN_TOOL_PATH)) + " " + args;
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

// Two strata with well separated variances; arms large enough that bootstrap
// redraws cannot exhaust their attempt budget.
std::string two_stratum_csv() {
    std::string out = "stratum,treated,outcome,propensity\n";
    for (int i = 0; i < 40; ++i)
        out += "A," + std::to_string(i % 2) + "," + std::to_string(i < 2 ? 1 : 0) + ",0.5\n";
    for (int i = 0; i < 40; ++i)
        out += "B," + std::to_string(i % 2) + "," + std::to_string((i / 2) % 2) + ",0.4\n";
    return out;
}

std::string base_config(const std::string& extra = "") {
    return "gamma = 1.2\nalpha = 0.10\nbootstrap_reps = 40\nn_r = 100\n"
           "default_rule = equal\nseed = 7\n" +
           extra;
}

std::string small_spec_json() {
    return R"({
  "strata": [
    {"id": "a", "mu0": 0.05, "mu1": 0.1, "n_o": 400, "propensity": 0.45},
    {"id": "b", "mu0": 0.45, "mu1": 0.55, "n_o": 400, "propensity": 0.55}
  ],
  "confounding_gamma": 1.0,
  "outcome_tilt": 0.0,
  "weight_mode": "equal",
  "seed": 11,
  "reps": 30,
  "gammas": [1.0]
})";
}

} // namespace

TEST_CASE("format_double round-trips doubles exactly") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(0.25) == "0.25");
    CHECK(format_double(-2.0) == "-2");

    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double expo = rng.uniform(-12.0, 12.0);
        const double v = (rng.uniform01() - 0.5) * std::pow(10.0, expo);
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("dataset CSV round trip keeps order and values") {
    const fs::path dir = fresh_dir("dataset_rt");

    // Interleaved rows: strata keep first-seen order.
    const fs::path p = write_text(dir, "data.csv",
                                  "stratum,treated,outcome,propensity\n"
                                  "s1,1,0,0.4\n"
                                  "s2,0,1,0.6\n"
                                  "s1,0,1,0.35\n"
                                  "\n"
                                  "s2,1,0,0.65\n");
    const auto strata = read_dataset_csv(p);
    REQUIRE(strata.size() == 2);
    CHECK(strata[0].stratum_id == "s1");
    CHECK(strata[1].stratum_id == "s2");
    REQUIRE(strata[0].units.size() == 2);
    REQUIRE(strata[1].units.size() == 2);
    CHECK(strata[0].units[0].treated);
    CHECK(strata[0].units[0].outcome == 0);
    CHECK(strata[0].units[0].propensity == 0.4);
    CHECK_FALSE(strata[0].units[1].treated);
    CHECK(strata[0].units[1].outcome == 1);
    CHECK(strata[0].units[1].propensity == 0.35);

    // CRLF input parses identically.
    const fs::path crlf = write_text(dir, "crlf.csv",
                                     "stratum,treated,outcome,propensity\r\n"
                                     "s1,1,0,0.4\r\n"
                                     "s1,0,1,0.35\r\n");
    const auto strata2 = read_dataset_csv(crlf);
    REQUIRE(strata2.size() == 1);
    CHECK(strata2[0].units.size() == 2);
    CHECK(strata2[0].units[1].propensity == 0.35);

    // Write-read round trip through a validated dataset.
    const Dataset data = validate_dataset(strata);
    const fs::path out = dir / "echo.csv";
    write_dataset_csv(out, data);
    const auto back = read_dataset_csv(out);
    REQUIRE(back.size() == data.strata.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].stratum_id == data.strata[i].stratum_id);
        REQUIRE(back[i].units.size() == data.strata[i].units.size());
        for (std::size_t u = 0; u < back[i].units.size(); ++u) {
            CHECK(back[i].units[u].treated == data.strata[i].units[u].treated);
            CHECK(back[i].units[u].outcome == data.strata[i].units[u].outcome);
            CHECK(back[i].units[u].propensity == data.strata[i].units[u].propensity);
        }
    }
}

TEST_CASE("dataset CSV errors name the file and line") {
    const fs::path dir = fresh_dir("dataset_err");
    const std::string hdr = "stratum,treated,outcome,propensity\n";

    CHECK_THROWS_WITH(read_dataset_csv(write_text(dir, "e1.csv", "")),
                      ContainsSubstring("empty file"));
    CHECK_THROWS_WITH(read_dataset_csv(write_text(dir, "e2.csv", "a,b,c\ns1,1,0,0.4\n")),
                      ContainsSubstring("e2.csv:1: expected header"));
    CHECK_THROWS_WITH(read_dataset_csv(write_text(dir, "e3.csv", hdr + "s1,1,0,0.4\ns1,1,0\n")),
                      ContainsSubstring("e3.csv:3: expected 4 columns"));
    CHECK_THROWS_WITH(read_dataset_csv(write_text(dir, "e4.csv", hdr + "s1,2,0,0.4\n")),
                      ContainsSubstring("e4.csv:2: treated must be 0 or 1"));
    CHECK_THROWS_WITH(read_dataset_csv(write_text(dir, "e5.csv", hdr + "s1,1,7,0.4\n")),
                      ContainsSubstring("outcome must be 0 or 1"));
    CHECK_THROWS_WITH(read_dataset_csv(write_text(dir, "e6.csv", hdr + "s1,1,0,zap\n")),
                      ContainsSubstring("e6.csv:2: invalid number 'zap'"));
    CHECK_THROWS_WITH(read_dataset_csv(write_text(dir, "e7.csv", hdr + ",1,0,0.4\n")),
                      ContainsSubstring("empty stratum id"));
    CHECK_THROWS_WITH(read_dataset_csv(write_text(dir, "e8.csv", hdr)),
                      ContainsSubstring("no data rows"));
    CHECK_THROWS_WITH(read_dataset_csv(dir / "missing.csv"), ContainsSubstring("cannot open"));
}

TEST_CASE("strata weights CSV feeds load_dataset") {
    const fs::path dir = fresh_dir("strata_csv");
    const fs::path data = write_text(dir, "data.csv", two_stratum_csv());

    const fs::path w = write_text(dir, "w.csv", "stratum,weight\nA,2\nB,2\n");
    const auto weights = read_strata_csv(w);
    REQUIRE(weights.size() == 2);
    CHECK(weights.at("A") == 2.0);

    // Raw weights renormalize to shares.
    const Dataset d = load_dataset(data, w);
    REQUIRE(d.strata.size() == 2);
    CHECK(d.weights()[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(d.weights()[1] == Catch::Approx(0.5).margin(1e-15));
    REQUIRE_FALSE(d.warnings.empty());

    // Without a weights file, population shares apply (equal sizes here).
    const Dataset dflt = load_dataset(data, std::nullopt);
    CHECK(dflt.weights()[0] == Catch::Approx(0.5).margin(1e-15));

    CHECK_THROWS_WITH(read_strata_csv(write_text(dir, "dup.csv", "stratum,weight\nA,1\nA,2\n")),
                      ContainsSubstring("duplicate stratum 'A'"));
    CHECK_THROWS_WITH(read_strata_csv(write_text(dir, "hdr.csv", "weight,stratum\nA,1\n")),
                      ContainsSubstring("hdr.csv:1: expected header"));
    CHECK_THROWS_WITH(read_strata_csv(write_text(dir, "cols.csv", "stratum,weight\nA,1,9\n")),
                      ContainsSubstring("expected 2 columns"));

    CHECK_THROWS_WITH(load_dataset(data, write_text(dir, "miss.csv", "stratum,weight\nA,1\n")),
                      ContainsSubstring("missing weight for stratum 'B'"));
    CHECK_THROWS_WITH(
        load_dataset(data, write_text(dir, "extra.csv", "stratum,weight\nA,1\nB,1\nC,1\n")),
        ContainsSubstring("absent from the dataset"));
}

TEST_CASE("config file parses every key and flags bad lines") {
    const std::string text =
        "# design settings\n"
        "gamma = 1.5   # widened\n"
        "alpha = 0.05\n"
        "bootstrap_reps = 321\n"
        "n_r = 2500\n"
        "default_rule = weighted\n"
        "seed = 99\n"
        "sigma_floor = 1e-7\n"
        "\n"
        "max_iters = 77\n"
        "rel_tol = 1e-9\n"
        "mve_tol = 1e-6\n";
    const DesignConfig cfg = parse_config_text(text, "t.cfg");
    CHECK(cfg.gamma == 1.5);
    CHECK(cfg.alpha == 0.05);
    CHECK(cfg.bootstrap_reps == 321);
    CHECK(cfg.n_r == 2500);
    CHECK(cfg.default_rule == DefaultRule::Weighted);
    CHECK(cfg.seed == 99);
    CHECK(cfg.sigma_floor == 1e-7);
    CHECK(cfg.solver.max_iters == 77);
    CHECK(cfg.solver.rel_tol == 1e-9);
    CHECK(cfg.solver.mve_tol == 1e-6);

    // Empty text keeps defaults.
    const DesignConfig dflt = parse_config_text("", "t.cfg");
    CHECK(dflt.gamma == 1.0);
    CHECK(dflt.alpha == 0.10);
    CHECK(dflt.bootstrap_reps == 200);
    CHECK(dflt.n_r == 1000);
    CHECK(dflt.default_rule == DefaultRule::Equal);
    CHECK(dflt.seed == 0);
    CHECK(dflt.sigma_floor == 1e-8);
    CHECK(dflt.solver.max_iters == 10000);
    CHECK(dflt.solver.rel_tol == 1e-10);
    CHECK(dflt.solver.mve_tol == 1e-7);

    CHECK_THROWS_WITH(parse_config_text("gamma = 1\n\nfoo = 2\n", "t.cfg"),
                      ContainsSubstring("t.cfg:3: unknown key 'foo'"));
    CHECK_THROWS_WITH(parse_config_text("default_rule = fancy\n", "t.cfg"),
                      ContainsSubstring("default_rule must be 'equal' or 'weighted'"));
    CHECK_THROWS_WITH(parse_config_text("gamma 1.5\n", "t.cfg"),
                      ContainsSubstring("t.cfg:1: expected 'key = value'"));
    CHECK_THROWS_WITH(parse_config_text("gamma =   # nothing\n", "t.cfg"),
                      ContainsSubstring("empty value for 'gamma'"));
    CHECK_THROWS_WITH(parse_config_text("n_r = many\n", "t.cfg"),
                      ContainsSubstring("invalid integer 'many'"));

    const fs::path dir = fresh_dir("config");
    const DesignConfig loaded = load_config(write_text(dir, "run.cfg", text));
    CHECK(loaded.bootstrap_reps == 321);

    const ordered_json j = config_to_json(cfg);
    CHECK(j["gamma"] == 1.5);
    CHECK(j["default_rule"] == "weighted");
    CHECK(j["max_iters"] == 77);
}

TEST_CASE("regions JSON round trip preserves geometry") {
    const fs::path dir = fresh_dir("regions_json");
    std::vector<NamedRegion> regions(2);
    regions[0] = {"s one", {{{0.08, 0.15}, {400.0, 150.0, 300.0}}, 1e-8, 0.25}, {0.07, 0.16}};
    regions[1] = {"s/two", {{{0.21, 0.04}, {900.0, -120.0, 500.0}}, 1e-8, 0.25}, {0.2, 0.05}};
    const fs::path p = dir / "regions.json";
    write_regions_json(p, regions);

    const auto back = load_regions_json(p);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].stratum == regions[i].stratum);
        CHECK(back[i].region.ellipse.center.x == regions[i].region.ellipse.center.x);
        CHECK(back[i].region.ellipse.center.y == regions[i].region.ellipse.center.y);
        CHECK(back[i].region.ellipse.shape.xx == regions[i].region.ellipse.shape.xx);
        CHECK(back[i].region.ellipse.shape.xy == regions[i].region.ellipse.shape.xy);
        CHECK(back[i].region.ellipse.shape.yy == regions[i].region.ellipse.shape.yy);
        CHECK(back[i].region.box_lo == regions[i].region.box_lo);
        CHECK(back[i].region.box_hi == regions[i].region.box_hi);
        CHECK(back[i].point_estimate.x == regions[i].point_estimate.x);
        CHECK(back[i].point_estimate.y == regions[i].point_estimate.y);
    }
    // Membership agrees on a grid spanning the box and beyond.
    for (int ix = 0; ix <= 20; ++ix)
        for (int iy = 0; iy <= 20; ++iy) {
            const Vec2 pt{0.015 * ix, 0.015 * iy};
            CHECK(back[0].region.contains(pt) == regions[0].region.contains(pt));
        }
    // point_estimate is optional and defaults to the origin.
    const std::string no_pe =
        R"({"regions":[{"stratum":"a","ellipse_center":[0.1,0.1],)"
        R"("ellipse_shape":[[100.0,0.0],[0.0,100.0]],"box_lo":1e-8,"box_hi":0.25}]})";
    const auto lean = load_regions_json(write_text(dir, "lean.json", no_pe));
    CHECK(lean[0].point_estimate.x == 0.0);
    CHECK(lean[0].point_estimate.y == 0.0);
}

TEST_CASE("regions JSON rejects malformed documents") {
    const fs::path dir = fresh_dir("regions_bad");
    auto expect = [&](const std::string& name, const std::string& text, const std::string& msg) {
        CHECK_THROWS_WITH(load_regions_json(write_text(dir, name, text)), ContainsSubstring(msg));
    };
    expect("b1.json", "not json at all", "JSON parse error");
    expect("b2.json", R"([1,2,3])", "expected top-level object with 'regions' array");
    expect("b3.json", R"({"regions":[]})", "no regions");
    expect("b4.json",
           R"({"regions":[{"stratum":"a","ellipse_center":[0.1,0.1],)"
           R"("ellipse_shape":[[100.0,1.0],[2.0,100.0]],"box_lo":1e-8,"box_hi":0.25}]})",
           "not symmetric");
    expect("b5.json",
           R"({"regions":[{"stratum":"a","ellipse_center":[0.1,0.1],)"
           R"("ellipse_shape":[[1.0,2.0],[2.0,1.0]],"box_lo":1e-8,"box_hi":0.25}]})",
           "not positive definite");
    expect("b6.json",
           R"({"regions":[{"stratum":"a","ellipse_center":[0.1,0.1],)"
           R"("ellipse_shape":[[100.0,0.0],[0.0,100.0]],"box_lo":0.3,"box_hi":0.25}]})",
           "invalid box");
    expect("b7.json", R"({"regions":[{"ellipse_center":[0.1,0.1]}]})", "malformed region record");
}

TEST_CASE("rectangle CSV round trip is exact") {
    const fs::path dir = fresh_dir("rects_csv");
    std::vector<std::pair<std::string, std::vector<ReplicateRectangle>>> per;
    per.push_back({"A",
                   {{{0.1, 0.2}, {0.15, 0.22}},
                    {{1.0 / 3.0, 0.34}, {0.01, 0.24999999999999997}}}});
    per.push_back({"B", {{{0.0, 0.25}, {0.0, 0.25}}}});
    const fs::path p = dir / "rects.csv";
    write_rectangles_csv(p, per);

    const auto back = read_rectangles_csv(p);
    REQUIRE(back.size() == 2);
    CHECK(back[0].first == "A");
    REQUIRE(back[0].second.size() == 2);
    CHECK(back[0].second[1].sigma0.var_lower == 1.0 / 3.0);
    CHECK(back[0].second[1].sigma1.var_upper == 0.24999999999999997);
    CHECK(back[1].second[0].sigma0.var_upper == 0.25);

    CHECK_THROWS_WITH(read_rectangles_csv(write_text(dir, "h.csv", "a,b\n1,2\n")),
                      ContainsSubstring("h.csv:1: unexpected header"));
    CHECK_THROWS_WITH(
        read_rectangles_csv(write_text(
            dir, "c.csv", "stratum,replicate,s0_lo,s0_hi,s1_lo,s1_hi\nA,0,0.1,0.2,0.1\n")),
        ContainsSubstring("c.csv:2: expected 6 columns"));
}

TEST_CASE("benchmark CSV encodes NaN gamma as an empty field") {
    const fs::path dir = fresh_dir("bench_csv");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    BenchmarkReport rep;
    rep.reps = 400;
    rep.seed = 31;
    rep.rows = {{"equal", nan, 0.002, 0.0, -0.1},
                {"weighted", nan, 0.0021, 0.05, -0.09},
                {"naive", nan, 0.0019, -0.05, 0.0},
                {"regret_min", 1.5, 0.0015, -0.35, -0.2}};
    const fs::path p = dir / "benchmark.csv";
    write_benchmark_csv(p, rep);

    const std::string raw = read_file_bytes(p);
    CHECK_THAT(raw, ContainsSubstring("\nequal,,"));
    CHECK_THAT(raw, ContainsSubstring("regret_min,1.5,"));

    const BenchmarkReport back = read_benchmark_csv(p);
    REQUIRE(back.rows.size() == 4);
    CHECK(back.reps == 400);
    CHECK(back.seed == 31);
    CHECK(std::isnan(back.rows[0].gamma));
    CHECK(back.rows[3].gamma == 1.5);
    CHECK(back.rows[3].avg_loss == 0.0015);
    CHECK(back.rows[0].rel_to_naive == -0.1);

    CHECK_THROWS_WITH(read_benchmark_csv(write_text(dir, "h.csv", "design,gamma\nx,1\n")),
                      ContainsSubstring("unexpected header"));
    CHECK_THROWS_WITH(
        read_benchmark_csv(write_text(
            dir, "c.csv", "design,gamma,avg_loss,rel_to_equal,rel_to_naive,reps,seed\nx,1,2\n")),
        ContainsSubstring("expected 7 columns"));
}

TEST_CASE("synthetic spec JSON applies defaults and validates") {
    const fs::path dir = fresh_dir("spec_json");

    const SyntheticSpec full = load_synthetic_spec(write_text(dir, "full.json", small_spec_json()));
    REQUIRE(full.strata.size() == 2);
    CHECK(full.strata[0].id == "a");
    CHECK(full.strata[0].mu0 == 0.05);
    CHECK(full.strata[1].n_o == 400);
    CHECK(full.strata[1].propensity == 0.55);
    CHECK(full.confounding_gamma == 1.0);
    CHECK(full.outcome_tilt == 0.0);
    CHECK(full.weight_mode == WeightMode::Equal);
    CHECK(full.seed == 11);
    CHECK(full.reps == 30);
    REQUIRE(full.gammas.size() == 1);
    CHECK(full.gammas[0] == 1.0);

    const std::string minimal =
        R"({"strata":[{"id":"x","mu0":0.3,"mu1":0.5,"n_o":100,"propensity":0.4}]})";
    const SyntheticSpec lean = load_synthetic_spec(write_text(dir, "min.json", minimal));
    CHECK(lean.confounding_gamma == 1.0);
    CHECK(lean.outcome_tilt == 0.1);
    CHECK(lean.weight_mode == WeightMode::Population);
    CHECK(lean.seed == 0);
    CHECK(lean.reps == 1000);
    REQUIRE(lean.gammas.size() == 1);
    CHECK(lean.gammas[0] == 1.0);

    auto expect = [&](const std::string& name, const std::string& text, const std::string& msg) {
        CHECK_THROWS_WITH(load_synthetic_spec(write_text(dir, name, text)), ContainsSubstring(msg));
    };
    expect("s1.json", "nope", "JSON parse error");
    expect("s2.json", R"({"reps":5})", "expected object with 'strata'");
    expect("s3.json",
           R"({"strata":[{"id":"x","mu0":"big","mu1":0.5,"n_o":100,"propensity":0.4}]})",
           "malformed synthetic spec");
    expect("s4.json",
           R"({"strata":[{"id":"x","mu0":0.3,"mu1":0.5,"n_o":100,"propensity":0.4}],)"
           R"("weight_mode":"lumpy"})",
           "weight_mode must be 'population' or 'equal'");
    expect("s5.json",
           R"({"strata":[{"id":"x","mu0":2.0,"mu1":0.5,"n_o":100,"propensity":0.4}],)"
           R"("outcome_tilt":0.0})",
           "mean out of range");
}

TEST_CASE("solve report JSON carries the plan and a bounded trace") {
    SolveReport rep;
    rep.sigmas = {{0.04, 0.06}, {0.2, 0.21}};
    rep.objective = -1.25e-4;
    rep.iterations = 17;
    rep.converged = true;
    rep.defaulted = false;
    rep.plan.continuous = {{30.5, 29.5}, {20.0, 20.0}};
    rep.plan.integer = {{31, 29}, {20, 20}};
    rep.wc_regret_continuous = -1.3e-4;
    rep.wc_regret_integer = -1.1e-4;
    rep.trace = {0.1, 0.2, 0.3};

    const ordered_json j = solve_report_to_json(rep, {"A", "B"});
    CHECK(j["objective"] == -1.25e-4);
    CHECK(j["iterations"] == 17);
    CHECK(j["converged"] == true);
    CHECK(j["defaulted"] == false);
    CHECK(j["worst_case_regret_continuous"] == -1.3e-4);
    CHECK(j["worst_case_regret_integer"] == -1.1e-4);
    REQUIRE(j["sigmas"].size() == 2);
    CHECK(j["sigmas"][1]["stratum"] == "B");
    CHECK(j["sigmas"][1]["s0"] == 0.2);
    REQUIRE(j["allocation"].size() == 2);
    CHECK(j["allocation"][0]["n_treated"] == 31);
    CHECK(j["allocation"][0]["n_treated_continuous"] == 30.5);
    REQUIRE(j["trace"].size() == 3);
    CHECK(j["trace"][2] == 0.3);

    // Long traces subsample but keep both endpoints exactly.
    SolveReport big = rep;
    big.trace.resize(2000);
    for (std::size_t i = 0; i < big.trace.size(); ++i)
        big.trace[i] = static_cast<double>(i) * 1e-6;
    const ordered_json jb = solve_report_to_json(big, {"A", "B"});
    CHECK(jb["trace"].size() == 501);
    CHECK(jb["trace"][0] == big.trace.front());
    CHECK(jb["trace"][500] == big.trace.back());
}

TEST_CASE("manifest records input digests and honors SOURCE_DATE_EPOCH") {
    // Digest helper matches the canonical 64-bit FNV-1a test vectors.
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");

    const fs::path dir = fresh_dir("manifest");
    const fs::path in1 = write_text(dir, "in1.csv", "stratum,weight\nA,1\n");
    const fs::path in2 = write_text(dir, "in2.cfg", "gamma = 2\n");
    DesignConfig cfg;
    cfg.gamma = 2.0;

    setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    write_manifest(dir, "bounds", 42, config_to_json(cfg), {in1, in2},
                   {"regions.json", "rectangles.csv"});
    const std::string first = read_file_bytes(dir / "run_manifest.json");
    write_manifest(dir, "bounds", 42, config_to_json(cfg), {in1, in2},
                   {"regions.json", "rectangles.csv"});
    CHECK(read_file_bytes(dir / "run_manifest.json") == first);
    unsetenv("SOURCE_DATE_EPOCH");

    const auto j = nlohmann::json::parse(first);
    CHECK(j["tool"] == "obsdesign");
    CHECK(j["version"] == kToolVersion);
    CHECK(j["command"] == "bounds");
    CHECK(j["seed"] == 42);
    CHECK(j["timestamp"] == "1700000000");
    CHECK(j["config"]["gamma"] == 2.0);
    REQUIRE(j["inputs"].size() == 2);
    CHECK(j["inputs"][0]["path"] == "in1.csv");
    CHECK(j["inputs"][0]["fnv1a64"] == fnv1a_hex(read_file_bytes(in1)));
    CHECK(j["inputs"][1]["fnv1a64"] == fnv1a_hex(read_file_bytes(in2)));
    REQUIRE(j["outputs"].size() == 2);
    CHECK(j["outputs"][1] == "rectangles.csv");
}

TEST_CASE("svg helpers clip and sample correctly") {
    // Square straddling the box clips to the overlap.
    std::vector<Vec2> square{{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
    const auto clipped = svg::clip_polygon_box(square, 0.0, 1.0);
    REQUIRE(clipped.size() == 4);
    double area = 0.0;
    for (std::size_t i = 0; i < clipped.size(); ++i) {
        const Vec2 a = clipped[i], b = clipped[(i + 1) % clipped.size()];
        area += a.x * b.y - b.x * a.y;
        CHECK(a.x >= 0.0);
        CHECK(a.x <= 1.0);
        CHECK(a.y >= 0.0);
        CHECK(a.y <= 1.0);
    }
    CHECK(std::abs(area) / 2.0 == Catch::Approx(0.25).margin(1e-12));

    std::vector<Vec2> inside{{0.2, 0.2}, {0.4, 0.2}, {0.3, 0.35}};
    CHECK(svg::clip_polygon_box(inside, 0.0, 1.0).size() == 3);
    std::vector<Vec2> outside{{2.0, 2.0}, {3.0, 2.0}, {2.5, 3.0}};
    CHECK(svg::clip_polygon_box(outside, 0.0, 1.0).empty());

    // Sampled boundary points satisfy the ellipse equation.
    const Ellipse e{{0.1, 0.12}, {200.0, 40.0, 100.0}};
    const auto poly = svg::ellipse_polyline(e);
    REQUIRE(poly.size() == 256);
    for (const Vec2& p : poly) CHECK(mahalanobis2(e, p) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("svg documents contain the expected structure") {
    NamedRegion nr;
    nr.stratum = "Z1";
    // Radius 0.1 circle centered near the cap so the outline must be clipped.
    nr.region = {{{0.2, 0.2}, {100.0, 0.0, 100.0}}, 1e-8, 0.25};
    nr.point_estimate = {0.21, 0.19};
    std::vector<ReplicateRectangle> rects = {{{0.15, 0.22}, {0.14, 0.23}}};

    const std::string doc = region_svg(nr, rects);
    CHECK_THAT(doc, ContainsSubstring("<svg "));
    CHECK_THAT(doc, ContainsSubstring("stratum Z1"));
    CHECK_THAT(doc, ContainsSubstring("<path d=\"M"));
    CHECK_THAT(doc, ContainsSubstring("</svg>\n"));

    // The clipped outline never leaves the admissible box.
    const auto poly = svg::clip_polygon_box(svg::ellipse_polyline(nr.region.ellipse),
                                            nr.region.box_lo, nr.region.box_hi);
    REQUIRE_FALSE(poly.empty());
    for (const Vec2& p : poly) {
        CHECK(p.x <= 0.25 + 1e-12);
        CHECK(p.y <= 0.25 + 1e-12);
        CHECK(p.x >= 1e-8 - 1e-12);
        CHECK(p.y >= 1e-8 - 1e-12);
    }

    BenchmarkReport rep;
    rep.reps = 100;
    rep.seed = 1;
    rep.rows = {{"equal", std::numeric_limits<double>::quiet_NaN(), 0.002, 0.0, 0.1},
                {"regret_min", 2.0, 0.001, -0.5, -0.4}};
    const std::string bars = loss_bars_svg(rep);
    CHECK_THAT(bars, ContainsSubstring("average loss by design"));
    CHECK_THAT(bars, ContainsSubstring("regret_min @2"));
    CHECK_THAT(bars, ContainsSubstring("#2166ac"));

    const std::string idx = report_index_html({"region_Z1.svg", "loss_bars.svg"});
    CHECK_THAT(idx, ContainsSubstring("<a href=\"region_Z1.svg\">"));
    CHECK_THAT(idx, ContainsSubstring("loss_bars.svg"));
}

TEST_CASE("cli reports version and rejects bad invocations") {
    const fs::path dir = fresh_dir("cli_basic");
    const fs::path out = dir / "ver.txt";
    CHECK(run_tool("--version > " + q(out) + " 2>&1") == 0);
    CHECK_THAT(read_file_bytes(out), ContainsSubstring("obsdesign 0.1.0"));

    CHECK(run_tool("> /dev/null 2>&1") == 2);
    CHECK(run_tool("bounds --data missing.csv > /dev/null 2>&1") == 2);
    CHECK(run_tool("frobnicate > /dev/null 2>&1") == 2);
}

TEST_CASE("cli bounds output matches the in-process pipeline") {
    const fs::path dir = fresh_dir("cli_bounds");
    const fs::path data = write_text(dir, "data.csv", two_stratum_csv());
    const fs::path cfg_path = write_text(dir, "run.cfg", base_config());
    const fs::path out1 = dir / "out1";

    REQUIRE(run_tool("bounds --data " + q(data) + " --config " + q(cfg_path) + " --out " + q(out1) +
                     " > /dev/null 2>&1",
                     "SOURCE_DATE_EPOCH=1700000000") == 0);
    REQUIRE(fs::exists(out1 / "regions.json"));
    REQUIRE(fs::exists(out1 / "rectangles.csv"));
    REQUIRE(fs::exists(out1 / "run_manifest.json"));

    // Recompute everything in process and demand exact agreement.
    const Dataset ds = load_dataset(data, std::nullopt);
    const DesignConfig cfg = load_config(cfg_path);
    const auto regions = load_regions_json(out1 / "regions.json");
    const auto rects_back = read_rectangles_csv(out1 / "rectangles.csv");
    REQUIRE(regions.size() == 2);
    REQUIRE(rects_back.size() == 2);
    for (std::size_t i = 0; i < ds.strata.size(); ++i) {
        const auto rects =
            bootstrap_rectangles(ds.strata[i], cfg.gamma, cfg.bootstrap_reps, cfg.seed);
        const VarianceRegion expect = region_from_rectangles(rects, cfg);
        CHECK(regions[i].stratum == ds.strata[i].stratum_id);
        CHECK(regions[i].region.ellipse.center.x == expect.ellipse.center.x);
        CHECK(regions[i].region.ellipse.center.y == expect.ellipse.center.y);
        CHECK(regions[i].region.ellipse.shape.xx == expect.ellipse.shape.xx);
        CHECK(regions[i].region.ellipse.shape.xy == expect.ellipse.shape.xy);
        CHECK(regions[i].region.ellipse.shape.yy == expect.ellipse.shape.yy);
        const Vec2 pe = sigma_point_estimate(ds.strata[i]);
        CHECK(regions[i].point_estimate.x == pe.x);
        CHECK(regions[i].point_estimate.y == pe.y);
        REQUIRE(rects_back[i].second.size() == rects.size());
        for (std::size_t b = 0; b < rects.size(); ++b) {
            CHECK(rects_back[i].second[b].sigma0.var_lower == rects[b].sigma0.var_lower);
            CHECK(rects_back[i].second[b].sigma1.var_upper == rects[b].sigma1.var_upper);
        }
    }

    const auto manifest = nlohmann::json::parse(read_file_bytes(out1 / "run_manifest.json"));
    CHECK(manifest["command"] == "bounds");
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["timestamp"] == "1700000000");
    CHECK(manifest["inputs"][0]["fnv1a64"] == fnv1a_hex(read_file_bytes(data)));
    CHECK(manifest["inputs"][1]["fnv1a64"] == fnv1a_hex(read_file_bytes(cfg_path)));

    // Reruns and extra worker threads reproduce every byte.
    const fs::path out2 = dir / "out2";
    REQUIRE(run_tool("bounds --data " + q(data) + " --config " + q(cfg_path) + " --out " + q(out2) +
                     " --threads 3 > /dev/null 2>&1",
                     "SOURCE_DATE_EPOCH=1700000000") == 0);
    CHECK(read_file_bytes(out2 / "regions.json") == read_file_bytes(out1 / "regions.json"));
    CHECK(read_file_bytes(out2 / "rectangles.csv") == read_file_bytes(out1 / "rectangles.csv"));
    CHECK(read_file_bytes(out2 / "run_manifest.json") ==
          read_file_bytes(out1 / "run_manifest.json"));

    // Seed and gamma overrides change the result and the manifest echo.
    const fs::path out3 = dir / "out3";
    REQUIRE(run_tool("bounds --data " + q(data) + " --config " + q(cfg_path) + " --out " + q(out3) +
                     " --seed 99 --gamma 2.0 > /dev/null 2>&1",
                     "SOURCE_DATE_EPOCH=1700000000") == 0);
    CHECK(read_file_bytes(out3 / "regions.json") != read_file_bytes(out1 / "regions.json"));
    const auto m3 = nlohmann::json::parse(read_file_bytes(out3 / "run_manifest.json"));
    CHECK(m3["seed"] == 99);
    CHECK(m3["config"]["gamma"] == 2.0);
}

TEST_CASE("cli design writes allocations and a solve report") {
    const fs::path dir = fresh_dir("cli_design");
    const fs::path data = write_text(dir, "data.csv", two_stratum_csv());
    const fs::path cfg = write_text(dir, "run.cfg", base_config());
    const fs::path out = dir / "out";

    REQUIRE(run_tool("design --data " + q(data) + " --config " + q(cfg) + " --out " + q(out) +
                     " > /dev/null 2>&1") == 0);
    for (const char* f : {"design_allocation.csv", "design_continuous.csv",
                          "naive_allocation.csv", "default_allocation.csv", "solve_report.json",
                          "run_manifest.json"})
        REQUIRE(fs::exists(out / f));

    const auto j = nlohmann::json::parse(read_file_bytes(out / "solve_report.json"));
    CHECK(j["converged"] == true);
    CHECK(j["defaulted"] == false);
    CHECK(j["worst_case_regret_continuous"].get<double>() < 0.0);
    REQUIRE(j["allocation"].size() == 2);
    long total = 0;
    for (const auto& a : j["allocation"])
        total += a["n_treated"].get<long>() + a["n_control"].get<long>();
    CHECK(total == 100);

    // The allocation CSV mirrors the report's integer plan.
    const auto lines = [&] {
        std::vector<std::string> out_lines;
        std::string raw = read_file_bytes(out / "design_allocation.csv");
        std::size_t start = 0;
        while (start < raw.size()) {
            const std::size_t pos = raw.find('\n', start);
            out_lines.push_back(raw.substr(start, pos - start));
            start = pos + 1;
        }
        return out_lines;
    }();
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "stratum,n_treated,n_control");
    CHECK(lines[1] == "A," + std::to_string(j["allocation"][0]["n_treated"].get<long>()) + "," +
                          std::to_string(j["allocation"][0]["n_control"].get<long>()));

    // The high-variance stratum receives more units than the low-variance one.
    const auto a0 = j["allocation"][0], a1 = j["allocation"][1];
    CHECK(a1["n_treated"].get<long>() + a1["n_control"].get<long>() >
          a0["n_treated"].get<long>() + a0["n_control"].get<long>());
}

TEST_CASE("cli design exits 3 when the solver cannot converge") {
    const fs::path dir = fresh_dir("cli_design_fail");
    const fs::path data = write_text(dir, "data.csv", two_stratum_csv());
    const fs::path cfg = write_text(dir, "run.cfg", base_config("max_iters = 1\n"));
    const fs::path out = dir / "out";
    const fs::path err = dir / "err.txt";

    CHECK(run_tool("design --data " + q(data) + " --config " + q(cfg) + " --out " + q(out) +
                   " > /dev/null 2> " + q(err)) == 3);
    CHECK_THAT(read_file_bytes(err), ContainsSubstring("did not converge"));
    REQUIRE(fs::exists(out / "solve_report.json"));
    const auto j = nlohmann::json::parse(read_file_bytes(out / "solve_report.json"));
    CHECK(j["converged"] == false);
}

TEST_CASE("cli surfaces validation failures as exit 2") {
    const fs::path dir = fresh_dir("cli_errors");
    const fs::path data = write_text(dir, "data.csv", two_stratum_csv());
    const fs::path err = dir / "err.txt";

    // Unknown config key.
    const fs::path bad_key = write_text(dir, "bad_key.cfg", "gamme = 1.2\n");
    CHECK(run_tool("bounds --data " + q(data) + " --config " + q(bad_key) + " --out " +
                   q(dir / "o1") + " > /dev/null 2> " + q(err)) == 2);
    CHECK_THAT(read_file_bytes(err), ContainsSubstring("unknown key 'gamme'"));

    // Config value that fails semantic validation.
    const fs::path bad_gamma = write_text(dir, "bad_gamma.cfg", "gamma = 0.5\n");
    CHECK(run_tool("bounds --data " + q(data) + " --config " + q(bad_gamma) + " --out " +
                   q(dir / "o2") + " > /dev/null 2> " + q(err)) == 2);
    CHECK_THAT(read_file_bytes(err), ContainsSubstring("gamma must be >= 1"));

    // Dataset cell error carries its line number through the CLI.
    const fs::path bad_data = write_text(dir, "bad.csv",
                                         "stratum,treated,outcome,propensity\n"
                                         "A,1,0,0.5\nA,0,1,0.5\nA,1,3,0.5\n");
    const fs::path cfg = write_text(dir, "run.cfg", base_config());
    CHECK(run_tool("bounds --data " + q(bad_data) + " --config " + q(cfg) + " --out " +
                   q(dir / "o3") + " > /dev/null 2> " + q(err)) == 2);
    CHECK_THAT(read_file_bytes(err), ContainsSubstring("bad.csv:4"));
}

TEST_CASE("cli simulate and report complete the pipeline") {
    const fs::path dir = fresh_dir("cli_pipeline");
    const fs::path data = write_text(dir, "data.csv", two_stratum_csv());
    const fs::path cfg = write_text(dir, "run.cfg", base_config());
    const fs::path spec = write_text(dir, "spec.json", small_spec_json());
    const fs::path bout = dir / "bounds_out";
    const fs::path sout = dir / "sim_out";
    const fs::path rout = dir / "report_out";

    REQUIRE(run_tool("bounds --data " + q(data) + " --config " + q(cfg) + " --out " + q(bout) +
                     " > /dev/null 2>&1") == 0);
    REQUIRE(run_tool("simulate --spec " + q(spec) + " --config " + q(cfg) + " --out " + q(sout) +
                     " > /dev/null 2>&1") == 0);

    const BenchmarkReport rep = read_benchmark_csv(sout / "benchmark.csv");
    REQUIRE(rep.rows.size() == 4);
    CHECK(rep.rows[0].design == "equal");
    CHECK(rep.rows[1].design == "weighted");
    CHECK(rep.rows[2].design == "naive");
    CHECK(rep.rows[3].design == "regret_min");
    CHECK(rep.rows[3].gamma == 1.0);
    CHECK(rep.rows[0].rel_to_equal == 0.0);
    CHECK(rep.reps == 30);
    for (const auto& row : rep.rows) CHECK(row.avg_loss >= 0.0);

    REQUIRE(run_tool("report --regions " + q(bout / "regions.json") + " --rects " +
                     q(bout / "rectangles.csv") + " --benchmark " + q(sout / "benchmark.csv") +
                     " --out " + q(rout) + " > /dev/null 2>&1") == 0);
    for (const char* f : {"region_A.svg", "region_B.svg", "loss_bars.svg", "index.html",
                          "run_manifest.json"})
        REQUIRE(fs::exists(rout / f));
    CHECK_THAT(read_file_bytes(rout / "region_A.svg"), ContainsSubstring("<svg "));
    CHECK_THAT(read_file_bytes(rout / "index.html"), ContainsSubstring("region_B.svg"));

    // Without a benchmark the bar chart is skipped.
    const fs::path rout2 = dir / "report_out2";
    REQUIRE(run_tool("report --regions " + q(bout / "regions.json") + " --rects " +
                     q(bout / "rectangles.csv") + " --out " + q(rout2) +
                     " > /dev/null 2>&1") == 0);
    CHECK(fs::exists(rout2 / "region_A.svg"));
    CHECK_FALSE(fs::exists(rout2 / "loss_bars.svg"));
}
