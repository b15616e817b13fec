// End-to-end checks of the command line binary: spawn it against
// generated configs and inspect exit codes and artifacts.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(CLI_BINARY) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    RunResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "speclaw_cli_test";
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const std::string& name, const json& j) {
    const fs::path path = work_dir() / name;
    std::ofstream out(path);
    out << j.dump(2);
    return path;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json figure1_model() {
    return json{{"phi", 0.1},
                {"atoms", json::array({{{"s", 10.0}, {"weight", 0.1}},
                                       {{"s", 5.0}, {"weight", 0.1}},
                                       {{"s", 1.5}, {"weight", 0.5}},
                                       {{"s", 1.0}, {"weight", 0.3}}})},
                {"dims", {{"M", 100}, {"Mhat", 100}, {"N", 1000}}}};
}

}  // namespace

TEST_CASE("edges prints the closed-form values") {
    const auto cfg = write_config(
        "edges.json",
        json{{"version", 1},
             {"model", {{"phi", 0.25}, {"atoms", json::array({{{"s", 1.0}, {"weight", 1.0}}})}}}});
    const auto out = work_dir() / "out_edges";
    const auto r = run_cli("edges --config " + cfg.string() + " --out " + out.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("2.25") != std::string::npos);
    CHECK(r.output.find("0.25") != std::string::npos);
    CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("density csv support matches the three figure-1 components") {
    json cfg{{"version", 1}, {"model", figure1_model()}, {"density", {{"points", 300}}}};
    const auto path = write_config("density.json", cfg);
    const auto out = work_dir() / "out_density";
    const auto r = run_cli("density --config " + path.string() + " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("components: 3") != std::string::npos);

    std::ifstream in(out / "density.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);  // header
    // components: [0.576, 2.260], [4.120, 6.067], [8.336, 12.311]
    auto inside = [](double e) {
        return (e > 0.7 && e < 2.1) || (e > 4.3 && e < 5.9) || (e > 8.6 && e < 12.0);
    };
    auto in_gap = [](double e) { return (e > 2.5 && e < 3.9) || (e > 6.3 && e < 8.1); };
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const double e = std::stod(line.substr(0, c1));
        const double rho = std::stod(line.substr(c1 + 1));
        if (inside(e)) CHECK(rho > 1e-4);
        if (in_gap(e)) CHECK(rho < 1e-8);
    }
}

TEST_CASE("verify-local-law asserts cleanly and flags the corrupted equivalent") {
    json cfg{{"version", 1},
             {"model",
              {{"phi", 0.5},
               {"atoms", json::array({{{"s", 1.0}, {"weight", 1.0}}})},
               {"dims", {{"M", 150}, {"Mhat", 150}, {"N", 300}}}}},
             {"grid", {{"kind", "bulk"}, {"n_energies", 3}, {"eta_floor_exponent", 0.8}}},
             {"trials", 2},
             {"seed", 11}};
    const auto clean_cfg = write_config("ll_clean.json", cfg);
    const auto out1 = work_dir() / "out_ll_clean";
    const auto clean =
        run_cli("verify-local-law --assert --config " + clean_cfg.string() + " --out " +
                out1.string());
    CHECK(clean.exit_code == 0);
    CHECK(fs::exists(out1 / "local_law_scan.csv"));
    CHECK(fs::exists(out1 / "local_law_scan.svg"));

    cfg["debug"] = {{"corrupt_m", 0.1}};
    const auto bad_cfg = write_config("ll_bad.json", cfg);
    const auto bad = run_cli("verify-local-law --assert --config " + bad_cfg.string() +
                             " --out " + (work_dir() / "out_ll_bad").string());
    CHECK(bad.exit_code == 2);

    // without --assert the run reports but exits zero
    const auto soft = run_cli("verify-local-law --config " + bad_cfg.string() + " --out " +
                              (work_dir() / "out_ll_soft").string());
    CHECK(soft.exit_code == 0);
}

TEST_CASE("config errors exit 1") {
    const auto bad = write_config("bad.json", json{{"version", 1}, {"mdoel", json::object()}});
    const auto r = run_cli("density --config " + bad.string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("unknown key") != std::string::npos);

    const auto r2 = run_cli("density --config /nonexistent/cfg.json");
    CHECK(r2.exit_code == 1);
}

TEST_CASE("reruns reproduce numeric outputs byte for byte") {
    json cfg{{"version", 1}, {"model", figure1_model()}};
    const auto path = write_config("gamma.json", cfg);
    const auto out1 = work_dir() / "rep1";
    const auto out2 = work_dir() / "rep2";
    REQUIRE(run_cli("gamma --config " + path.string() + " --out " + out1.string()).exit_code == 0);
    REQUIRE(run_cli("gamma --config " + path.string() + " --out " + out2.string()).exit_code == 0);
    CHECK(slurp(out1 / "gamma.csv") == slurp(out2 / "gamma.csv"));

    json scfg{{"version", 1},
              {"model",
               {{"phi", 1.0},
                {"atoms", json::array({{{"s", 1.0}, {"weight", 1.0}}})},
                {"dims", {{"M", 80}, {"Mhat", 80}, {"N", 80}}}}},
              {"trials", 6},
              {"seed", 21},
              {"edge_stats",
               {{"edge", 0}, {"depth", 1}, {"reference_n", 80}, {"reference_trials", 6}}},
              {"thresholds", {{"ks", 1.0}}}};
    const auto spath = write_config("es.json", scfg);
    const auto sout1 = work_dir() / "es1";
    const auto sout2 = work_dir() / "es2";
    // different thread counts must not change the sampled trials
    REQUIRE(run_cli("edge-stats --threads 1 --config " + spath.string() + " --out " +
                    sout1.string())
                .exit_code == 0);
    REQUIRE(run_cli("edge-stats --threads 4 --config " + spath.string() + " --out " +
                    sout2.string())
                .exit_code == 0);
    CHECK(slurp(sout1 / "edge_samples.csv") == slurp(sout2 / "edge_samples.csv"));
}

TEST_CASE("kcoeffs vanishing assertion") {
    json cfg{{"version", 1},
             {"kcoeffs",
              {{"moments0", json::array({0.0, 1.0, 0.5})},
               {"moments1", json::array({0.0, 1.0, 0.5})},
               {"theta", 0.3},
               {"n_max", 3},
               {"expect_zero_up_to", 3}}}};
    const auto path = write_config("k.json", cfg);
    const auto r =
        run_cli("kcoeffs --assert --config " + path.string() + " --out " +
                (work_dir() / "out_k").string());
    CHECK(r.exit_code == 0);

    cfg["kcoeffs"]["moments1"] = json::array({0.0, 1.0, 2.5});
    const auto path2 = write_config("k2.json", cfg);
    const auto r2 =
        run_cli("kcoeffs --assert --config " + path2.string() + " --out " +
                (work_dir() / "out_k2").string());
    CHECK(r2.exit_code == 2);
}
