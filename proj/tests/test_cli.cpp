#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef LINEARIZE_CLI_PATH
#define LINEARIZE_CLI_PATH "./linearize"
#endif

namespace {

struct CliResult {
    int exit_code;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    std::string cmd = std::string(LINEARIZE_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 4096> buf;
    while (size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("examples subcommand lists the registry") {
    CliResult r = run_cli("examples");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("example1") != std::string::npos);
    CHECK(r.out.find("example2") != std::string::npos);
    CHECK(r.out.find("sin1d") != std::string::npos);
    CHECK(r.out.find("cubic1d") != std::string::npos);
    CHECK(r.out.find("dim=3") != std::string::npos);
}

TEST_CASE("map evaluates example1 points") {
    CliResult r = run_cli(
        "map --system example1 --mode local --cutoff none --point 0,1,0 --point 0,0,0");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("y=0.333333") != std::string::npos);
    CHECK(r.out.find("x=0,0,0 y=0,0,0 status=ok") != std::string::npos);
}

TEST_CASE("map reports per-point region rejections without aborting the batch") {
    CliResult r = run_cli("map --system sin1d --mode global --point 3.2 --point 1.5");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("status=not_in_region_of_attraction") != std::string::npos);
    CHECK(r.out.find("status=ok") != std::string::npos);
}

TEST_CASE("spectral rejections exit with code 3") {
    CHECK(run_cli("map --system example1 --mode global --point 0,0,0").exit_code == 3);

    // a rotation has purely imaginary spectrum
    std::string path = "/tmp/linearize_test_rotation.json";
    {
        std::ofstream out(path);
        out << R"({"dimension": 2, "terms": [
            {"component": 0, "coeff": 1.0, "exponents": [0, 1]},
            {"component": 1, "coeff": -1.0, "exponents": [1, 0]}]})";
    }
    CHECK(run_cli("verify --system " + path + " --mode local --cutoff none").exit_code == 3);
    std::remove(path.c_str());
}

TEST_CASE("config errors exit with code 2") {
    CHECK(run_cli("map --point 1").exit_code == 2);                       // no system
    CHECK(run_cli("map --system example1 --point 1,2").exit_code == 2);   // bad dim
    CHECK(run_cli("map --system nosuch.json --point 1").exit_code == 2);  // no file
    CHECK(run_cli("grid --system sin1d --box 0:1").exit_code == 2);       // no --out
    CHECK(run_cli("grid --system sin1d --box bad --steps 3 --out /tmp/x.csv").exit_code ==
          2);
    CHECK(run_cli("map --system sin1d --mode sideways --point 1").exit_code == 2);
    CHECK(run_cli("map --system sin1d --cutoff fancy --point 1").exit_code == 2);
}

TEST_CASE("write failures exit with code 4") {
    CliResult r = run_cli(
        "grid --system sin1d --mode global --box -1:1 --steps 3 "
        "--out /nonexistent_dir/out.csv");
    CHECK(r.exit_code == 4);
}

TEST_CASE("grid emits a monotone CSV with the origin row exact") {
    std::string path = "/tmp/linearize_test_grid.csv";
    CliResult r = run_cli("grid --system sin1d --mode global --box -3:3 --steps 7 --out " +
                          path);
    CHECK(r.exit_code == 0);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x1,y1,status");
    double prev = -1e300;
    int rows = 0;
    bool saw_origin = false;
    std::string line;
    while (std::getline(in, line)) {
        ++rows;
        auto c1 = line.find(','), c2 = line.rfind(',');
        REQUIRE(c1 != std::string::npos);
        double x = std::stod(line.substr(0, c1));
        double y = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        CHECK(line.substr(c2 + 1) == "ok");
        CHECK(y > prev);
        prev = y;
        if (x == 0.0) {
            saw_origin = true;
            CHECK(y == 0.0);
        }
    }
    CHECK(rows == 7);
    CHECK(saw_origin);
    std::remove(path.c_str());
}

TEST_CASE("grid rows with a vanishing coupling reduce to the identity") {
    std::string path = "/tmp/linearize_test_grid2.csv";
    CliResult r = run_cli(
        "grid --system example2 --mode local --cutoff threshold --M 1 "
        "--box -1:1,-1:1,-1:1 --steps 3 --out " +
        path);
    CHECK(r.exit_code == 0);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "x1,x2,x3,y1,y2,y3,status");
    int identity_rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 7);
        double x1 = std::stod(cells[0]), x3 = std::stod(cells[2]);
        if (x1 * x3 * x3 == 0.0 && cells[6] == "ok") {
            ++identity_rows;
            for (int d = 0; d < 3; ++d) CHECK(cells[d] == cells[3 + d]);
        }
    }
    CHECK(identity_rows > 0);
    std::remove(path.c_str());
}

TEST_CASE("identical configs give byte-identical outputs") {
    std::string a = "/tmp/linearize_det_a.csv", b = "/tmp/linearize_det_b.csv";
    std::string args = "grid --system cubic1d --mode global --box -0.9:0.9 --steps 13 "
                       "--seed 42 --out ";
    CHECK(run_cli(args + a).exit_code == 0);
    CHECK(run_cli(args + b).exit_code == 0);
    std::string ca = slurp(a), cb = slurp(b);
    CHECK(!ca.empty());
    CHECK(ca == cb);
    std::remove(a.c_str());
    std::remove(b.c_str());

    std::string ja = "/tmp/linearize_det_a.json", jb = "/tmp/linearize_det_b.json";
    std::string vargs =
        "verify --system cubic1d --mode global --points 6 --seed 7 --out ";
    CHECK(run_cli(vargs + ja).exit_code == 0);
    CHECK(run_cli(vargs + jb).exit_code == 0);
    std::string va = slurp(ja), vb = slurp(jb);
    CHECK(!va.empty());
    CHECK(va == vb);
    std::remove(ja.c_str());
    std::remove(jb.c_str());
}

TEST_CASE("threaded grids match the single-threaded bytes") {
    std::string a = "/tmp/linearize_thr_a.csv", b = "/tmp/linearize_thr_b.csv";
    std::string base = "grid --system sin1d --mode global --box -2:2 --steps 9 --out ";
    CHECK(run_cli(base + a + " --threads 1").exit_code == 0);
    CHECK(run_cli(base + b + " --threads 4").exit_code == 0);
    CHECK(slurp(a) == slurp(b));
    std::remove(a.c_str());
    std::remove(b.c_str());
}

TEST_CASE("config file supplies flags and explicit flags win") {
    std::string cfg = "/tmp/linearize_test_cfg.json";
    {
        std::ofstream out(cfg);
        out << R"({"system": "example1", "mode": "local", "cutoff": "none",
                   "quad_tol": 1e-8})";
    }
    CliResult r = run_cli("map --config " + cfg + " --point 0,1,0");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("y=0.333333") != std::string::npos);

    // flag overrides the file's mode: global on a saddle is rejected
    CHECK(run_cli("map --config " + cfg + " --mode global --point 0,1,0").exit_code == 3);

    CHECK(run_cli("map --config /no/such/config.json --point 1").exit_code == 2);
    std::remove(cfg.c_str());
}

TEST_CASE("verify writes a parsable report and exits by pass state") {
    std::string path = "/tmp/linearize_test_report.json";
    CliResult r =
        run_cli("verify --system cubic1d --mode global --points 6 --out " + path);
    CHECK(r.exit_code == 0);
    std::string json = slurp(path);
    CHECK(json.find("\"system\": \"cubic1d\"") != std::string::npos);
    CHECK(json.find("\"pass\": true") != std::string::npos);
    CHECK(json.find("wall") == std::string::npos);  // timing stays out of the file
    std::remove(path.c_str());
}

TEST_CASE("a polynomial field file runs end to end") {
    std::string path = "/tmp/linearize_test_field.json";
    {
        std::ofstream out(path);
        out << R"({"dimension": 2, "terms": [
            {"component": 0, "coeff": -1.5, "exponents": [1, 0]},
            {"component": 1, "coeff": -1.0, "exponents": [0, 1]},
            {"component": 1, "coeff": 0.1, "exponents": [2, 0]}]})";
    }
    CliResult m = run_cli("map --system " + path + " --mode global --point 0.2,0.1");
    CHECK(m.exit_code == 0);
    CHECK(m.out.find("status=ok") != std::string::npos);

    std::string rep = "/tmp/linearize_test_field_report.json";
    CliResult v = run_cli("verify --system " + path + " --mode global --points 8 --out " + rep);
    CHECK(v.exit_code == 0);
    CHECK(slurp(rep).find("\"pass\": true") != std::string::npos);
    std::remove(rep.c_str());
    std::remove(path.c_str());
}

TEST_CASE("a resonant spectrum defeats the simplified form but not the ball cutoff") {
    // 2 lambda_1 = lambda_2 makes the single-integral form diverge; the
    // two-piece construction with a ball cutoff still works
    std::string path = "/tmp/linearize_test_resonant.json";
    {
        std::ofstream out(path);
        out << R"({"dimension": 2, "terms": [
            {"component": 0, "coeff": -1.0, "exponents": [1, 0]},
            {"component": 1, "coeff": -2.0, "exponents": [0, 1]},
            {"component": 1, "coeff": 0.1, "exponents": [2, 0]}]})";
    }
    CliResult raw = run_cli("map --system " + path + " --mode global --cutoff none "
                            "--point 0.2,0.1");
    CHECK(raw.exit_code == 0);
    CHECK(raw.out.find("status=non_decay") != std::string::npos);

    CliResult ball = run_cli("map --system " + path + " --mode global --cutoff ball "
                             "--M 0.5 --eps 0.2 --point 0.2,0.1");
    CHECK(ball.exit_code == 0);
    CHECK(ball.out.find("status=ok") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("map writes to a file when asked and fails cleanly when it cannot") {
    std::string path = "/tmp/linearize_test_map.txt";
    CliResult r = run_cli("map --system cubic1d --mode global --point 0.6 --out " + path);
    CHECK(r.exit_code == 0);
    CHECK(slurp(path).find("y=0.74999999") != std::string::npos);
    std::remove(path.c_str());

    CHECK(run_cli("map --system cubic1d --mode global --point 0.6 "
                  "--out /nonexistent_dir/map.txt").exit_code == 4);
}

TEST_CASE("the backward stable form is selectable") {
    // example2 with the threshold uses the backward form by default; forcing
    // it explicitly gives the same map
    CliResult a = run_cli("map --system example2 --mode local --cutoff threshold --M 1 "
                          "--point 1,0,0.5");
    CliResult b = run_cli("map --system example2 --mode local --cutoff threshold --M 1 "
                          "--stable-form backward --point 1,0,0.5");
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("-0.3465735") != std::string::npos);
}
