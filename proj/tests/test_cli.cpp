#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "gsched/io.hpp"
#include "support.hpp"

#ifndef GSCHED_CLI
#error "GSCHED_CLI must be defined"
#endif

namespace fs = std::filesystem;
using gsched::io::Json;

namespace {

struct Run {
    int code;
    std::string out;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gsched_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Run run(const std::string& args, const fs::path& dir, const std::string& env = "") {
    const fs::path log = dir / "stdout.txt";
    const std::string cmd = env + " '" + std::string(GSCHED_CLI) + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::string out_flag(const fs::path& dir) { return " --out '" + dir.string() + "'"; }

void write_matrix_file(const fs::path& p, const std::string& label, const gsched::MatX& a) {
    Json j;
    j["label"] = label;
    j["A"] = gsched::io::matrix_to_json(a);
    gsched::io::write_json(p, j);
}

// 6x6 matrix with the given 2x2 block in the top-left and -I elsewhere.
gsched::MatX padded(double a, double b, double c, double d) {
    gsched::MatX m = -gsched::MatX::Identity(6, 6);
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = c;
    m(1, 1) = d;
    return m;
}

} // namespace

TEST_CASE("simulate hold at idle") {
    const auto dir = scratch("hold");
    const auto r = run("simulate --preset hold --hold-point idle" + out_flag(dir), dir);
    REQUIRE(r.code == 0);
    const auto sum = gsched::io::read_json(dir / "summary.json");
    CHECK(sum["final_thrust"].get<double>() == doctest::Approx(7.317));
    CHECK(sum["final_error"][0].get<double>() <= 1e-12);
    CHECK(sum["final_error"][1].get<double>() <= 1e-12);
    CHECK(fs::exists(dir / "trace.csv"));
    const auto man = gsched::io::read_json(dir / "manifest.json");
    CHECK(man["command"] == "simulate");
    CHECK(man["controller"]["eta_c"].get<double>() == 3.0);
    CHECK(man["scenario"]["name"] == "hold");
}

TEST_CASE("simulate default scenario returns to idle, deterministically") {
    const auto a = scratch("ici_a");
    const auto b = scratch("ici_b");
    REQUIRE(run("simulate" + out_flag(a), a).code == 0);
    REQUIRE(run("simulate --preset idle-cruise-idle" + out_flag(b), b).code == 0);
    const auto sum = gsched::io::read_json(a / "summary.json");
    CHECK(sum["final_error"][0].get<double>() < 1e-3);
    CHECK(sum["final_error"][1].get<double>() < 1e-3);
    CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
}

TEST_CASE("scenario file, overrides and output directory from the environment") {
    const auto dir = scratch("env");
    const auto r = run("simulate --scenario '" + testsupport::data_path("scenarios/idle_cruise_idle.json") +
                           "' --t-final 30 --dt 0.02",
                       dir, "GSCHED_OUTPUT_DIR='" + dir.string() + "'");
    REQUIRE(r.code == 0);
    const auto man = gsched::io::read_json(dir / "manifest.json");
    CHECK(man["controller"]["dt"].get<double>() == 0.02);
    CHECK(man["scenario"]["t_final"].get<double>() == 30.0);
    CHECK(gsched::io::read_json(dir / "summary.json")["steps"].get<int>() == 1501);
}

TEST_CASE("configuration file with flag precedence") {
    const auto dir = scratch("config");
    {
        std::ofstream cfg(dir / "run.toml");
        cfg << "[simulate]\npreset = \"hold\"\nhold-point = \"cruise\"\nt-final = \"5\"\n";
    }
    REQUIRE(run("--config '" + (dir / "run.toml").string() + "' simulate" + out_flag(dir), dir).code == 0);
    CHECK(gsched::io::read_json(dir / "summary.json")["final_thrust"].get<double>() == doctest::Approx(70.5125));
    REQUIRE(run("--config '" + (dir / "run.toml").string() + "' simulate --hold-point idle" + out_flag(dir), dir)
                .code == 0);
    CHECK(gsched::io::read_json(dir / "summary.json")["final_thrust"].get<double>() == doctest::Approx(7.317));
}

TEST_CASE("configuration errors exit with 1") {
    const auto dir = scratch("errors");
    CHECK(run("simulate --model /nonexistent.json" + out_flag(dir), dir).code == 1);
    CHECK(run("simulate --preset sideways" + out_flag(dir), dir).code == 1);
    CHECK(run("simulate --preset hold --hold-point nowhere" + out_flag(dir), dir).code == 1);
    CHECK(run("simulate --eta-c -1" + out_flag(dir), dir).code == 1);
    CHECK(run("simulate --norm taxicab" + out_flag(dir), dir).code == 1);
    CHECK(run("simulate --no-such-flag", dir).code == 1);
    CHECK(run("", dir).code == 1);
    // ramp faster than the reference-rate bound
    {
        std::ofstream sc(dir / "fast.json");
        sc << R"({"breakpoints": [[0, 0.295, 0.161], [1, 0.7264, 0.5]], "t_final": 5})";
    }
    const std::string fast = "simulate --scenario '" + (dir / "fast.json").string() + "'" + out_flag(dir);
    CHECK(run(fast, dir).code == 1);
    CHECK(run(fast + " --allow-fast-ref", dir).code == 0);
}

TEST_CASE("numerical blow-up exits with 4") {
    const auto dir = scratch("blowup");
    const auto r = run("simulate --dt 2 --t-final 400" + out_flag(dir), dir);
    CHECK(r.code == 4);
    CHECK(r.out.find("step") != std::string::npos);
}

TEST_CASE("certify and verify") {
    const auto dir = scratch("certify");
    const auto r = run("certify --eq-samples 0 --transient 0" + out_flag(dir), dir);
    REQUIRE(r.code == 0);
    const auto cert = gsched::io::read_json(dir / "certificate.json");
    CHECK(cert["vertices"].size() == 5);
    CHECK(cert["solver"]["status"] == "feasible");
    CHECK(fs::exists(dir / "margins.csv"));

    const auto v = run("verify --certificate '" + (dir / "certificate.json").string() + "'" + out_flag(dir), dir);
    CHECK(v.code == 0);
    CHECK(v.out.find("VALID") != std::string::npos);

    const auto full = scratch("certify_full");
    const auto f = run("certify --random-vertices 3 --seed 4" + out_flag(full), full);
    REQUIRE(f.code == 0);
    CHECK(gsched::io::read_json(full / "certificate.json")["vertices"].size() == 23);
}

TEST_CASE("certify with a forced-unstable vertex names it and exits with 2") {
    const auto dir = scratch("unstable");
    write_matrix_file(dir / "bad.json", "runaway spool", padded(0.5, 0.0, 0.0, -1.0));
    const auto r = run("certify --eq-samples 0 --transient 0 --extra-vertex '" + (dir / "bad.json").string() + "'" +
                           out_flag(dir),
                       dir);
    CHECK(r.code == 2);
    CHECK(r.out.find("runaway spool") != std::string::npos);
}

TEST_CASE("certify without a common quadratic Lyapunov function exits with 3") {
    const auto dir = scratch("unknown");
    write_matrix_file(dir / "a.json", "upper", padded(-1, 100, 0, -1));
    write_matrix_file(dir / "b.json", "lower", padded(-1, 0, 100, -1));
    const auto r = run("certify --eq-samples 0 --transient 0 --max-iter 100 --extra-vertex '" +
                           (dir / "a.json").string() + "' --extra-vertex '" + (dir / "b.json").string() + "'" +
                           out_flag(dir),
                       dir);
    CHECK(r.code == 3);
    CHECK(gsched::io::read_json(dir / "certificate.json")["solver"]["status"] == "unknown");
}

TEST_CASE("published matrix: margin table") {
    const auto dir = scratch("published");
    const std::string p = "'" + testsupport::data_path("published_p.json") + "'";
    // asymmetric as printed: rejected unless symmetrized
    CHECK(run("verify --certificate " + p + out_flag(dir), dir).code == 1);
    const auto r = run("certify --eq-samples 0 --transient 0 --verify " + p + " --symmetrize" + out_flag(dir), dir);
    CHECK(r.code == 2);
    CHECK(r.out.find("equilibrium alpha=0.8818") != std::string::npos);
    const auto v = gsched::io::read_json(dir / "verify.json");
    CHECK(v["symmetrized"].get<bool>());
    CHECK(v["margins"].size() == 5);
}

TEST_CASE("analyze") {
    const auto dir = scratch("analyze");
    REQUIRE(run("analyze" + out_flag(dir), dir).code == 0);
    const std::string scan = slurp(dir / "scan.csv");
    CHECK(std::count(scan.begin(), scan.end(), '\n') == 101);

    const auto one = run("analyze --grid 1 --alpha-min 0.8818 --alpha-max 0.8818" + out_flag(dir), dir);
    CHECK(one.code == 0);
    CHECK(one.out.find("eigenvalues:") != std::string::npos);

    auto j = gsched::io::read_json(testsupport::data_path("turboshaft_model.json"));
    j["points"][4]["A"] = {{5.0, 0.0}, {-3.5, 2.3}};
    gsched::io::write_json(dir / "flipped.json", j);
    const std::string flipped = " --model '" + (dir / "flipped.json").string() + "'";
    CHECK(run("analyze" + flipped + out_flag(dir), dir).code == 1);
    const auto f = run("analyze --no-hurwitz-check" + flipped + out_flag(dir), dir);
    CHECK(f.code == 2);
    CHECK(f.out.find("UNSTABLE") != std::string::npos);
}
