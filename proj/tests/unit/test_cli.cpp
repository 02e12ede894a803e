#include "catch_amalgamated.hpp"

#include <cmath>
#include <fstream>

#include "cli_runner.hpp"
#include "kwsolve/field_io.hpp"

using kwtest::run_cli;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string bin = KWSOLVE_BIN;

std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

} // namespace

TEST_CASE("solve with constant data", "[cli]") {
    const auto r = run_cli(bin, "solve", {"--dims", "64", "--s", "-1", "--s_hat", "-1", "--n", "1", "--t", "1"},
                           "solve_const");
    REQUIRE(r.exit_code == 0);
    CHECK(r.at("status") == "converged");
    CHECK(r.number("residual") < 1e-8);
    const auto u = kw::io::read_field(r.file("u.kwf"));
    CHECK(u.sup_norm() < 1e-8);
    CHECK(std::filesystem::exists(r.file("trace.csv")));
}

TEST_CASE("construct-unsolvable then necessary", "[cli]") {
    const auto made = run_cli(bin, "construct-unsolvable",
                              {"--dims", "64", "--psi", "sin(x0)", "--alpha_const", "0.1", "--c", "-1"}, "construct");
    REQUIRE(made.exit_code == 0);
    CHECK(made.number("mean_phi") == Catch::Approx(-0.1).epsilon(1e-10));

    const auto nec = run_cli(bin, "necessary", {"--phi_file", made.file("phi.kwf").string(), "--c", "-1"}, "necessary");
    CHECK(nec.exit_code == 4);
    CHECK(nec.number("min_phi0") < 0.0);
    CHECK(nec.at("positive") == "false");
    CHECK(nec.at("status") == "certified-unsolvable");
}

TEST_CASE("asymptotic table", "[cli]") {
    const auto r = run_cli(bin, "asymptotic", {"--dims", "256", "--f", "sin(x0)", "--c_list", "-9,-99"}, "asym");
    REQUIRE(r.exit_code == 0);
    const auto rows = read_csv_rows(r.file("asymptotic.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][0] == -9.0);
    CHECK(rows[0][1] == Catch::Approx(0.1).epsilon(1e-6));
    CHECK(rows[1][0] == -99.0);
    CHECK(rows[1][1] == Catch::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("identical configurations give bit-identical reports", "[cli]") {
    const std::vector<std::string> args = {"--dims", "32,32", "--s", "-1+0.3*cos(x1)", "--u_star",
                                           "0.2*sin(x0)", "--alpha", "0.2*sin(x1);0", "--n", "2", "--t", "0"};
    const auto a = run_cli(bin, "roundtrip", args, "det_a");
    const auto b = run_cli(bin, "roundtrip", args, "det_b");
    REQUIRE(a.exit_code == 0);
    CHECK(a.report == b.report);
    CHECK(kwtest::slurp(a.file("u.kwf")) == kwtest::slurp(b.file("u.kwf")));
    CHECK(a.number("sup_error") < 1e-4);
}

TEST_CASE("emitted fields re-validate", "[cli]") {
    const auto r = run_cli(bin, "reduce",
                           {"--dims", "16,16", "--s", "-1+0.5*sin(x0)", "--s_hat", "-1", "--heatmap", "true"}, "reduce");
    REQUIRE(r.exit_code == 0);
    CHECK(r.number("c") == Catch::Approx(-2.0));  // n = t = 1 by default, so c = 2 mean(s)
    for (const char* name : {"g.kwf", "phi.kwf"}) {
        const auto v = run_cli(bin, "validate", {"--s_file", r.file(name).string()}, std::string("val_") + name);
        CHECK(v.exit_code == 0);
        CHECK(v.at("rank") == "2");
        CHECK(v.has("s.mean"));
    }
    // 8-bit PGM heatmap with its range recorded in the report.
    const std::string pgm = kwtest::slurp(r.file("phi.pgm"));
    CHECK(pgm.rfind("P5\n16 16\n255\n", 0) == 0);
    CHECK(pgm.size() == std::string("P5\n16 16\n255\n").size() + 256);
    CHECK(r.number("phi.pgm_min") <= r.number("phi.pgm_max"));
}

TEST_CASE("configuration files and overrides", "[cli]") {
    const auto dir = std::filesystem::temp_directory_path() / "kwsolve_cli_tests" / "cfg_src";
    std::filesystem::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "# constant solve\n"
            << "dims = 32\n"
            << "s = -2   # trailing comment\n"
            << "s_hat = -1\n"
            << "n = 1\n";
    }
    const auto a = run_cli(bin, "solve", {"--config", (dir / "run.cfg").string()}, "cfg_a");
    REQUIRE(a.exit_code == 0);
    CHECK(kw::io::read_field(a.file("u.kwf"))[0] == Catch::Approx(std::log(2.0)).epsilon(1e-8));

    const auto b = run_cli(bin, "solve", {"--config", (dir / "run.cfg").string(), "--s", "-3"}, "cfg_b");
    REQUIRE(b.exit_code == 0);
    CHECK(kw::io::read_field(b.file("u.kwf"))[0] == Catch::Approx(std::log(3.0)).epsilon(1e-8));

    {
        std::ofstream cfg(dir / "bad.cfg");
        cfg << "dims = 32\nbogus_key = 1\n";
    }
    CHECK(run_cli(bin, "solve", {"--config", (dir / "bad.cfg").string()}, "cfg_bad").exit_code == 2);

    // Field files are resolved relative to the config file.
    kw::io::write_field(kw::ScalarField(kw::GridSpec({32}), -1.0), dir / "shat.kwf");
    {
        std::ofstream cfg(dir / "files.cfg");
        cfg << "s = -1\ns_hat_file = shat.kwf\n";
    }
    const auto c = run_cli(bin, "solve", {"--config", (dir / "files.cfg").string()}, "cfg_files");
    CHECK(c.exit_code == 0);
}

TEST_CASE("output directory from the environment", "[cli]") {
    const auto r = run_cli(bin, "validate", {"--dims", "8", "--s", "1"}, "env_out", true);
    CHECK(r.exit_code == 0);
    CHECK(r.at("command") == "validate");
}

TEST_CASE("exit codes for bad input", "[cli]") {
    const auto parse = run_cli(bin, "solve", {"--dims", "64", "--s", "sin(", "--s_hat", "-1"}, "bad_parse");
    CHECK(parse.exit_code == 2);
    CHECK_THAT(parse.at("error"), ContainsSubstring("offset 4"));
    CHECK_THAT(parse.stderr_text, ContainsSubstring("offset 4"));

    const auto eval = run_cli(bin, "validate", {"--dims", "64", "--s", "log(x0-10)"}, "bad_eval");
    CHECK(eval.exit_code == 2);
    CHECK_THAT(eval.at("error"), ContainsSubstring("offset 0"));

    CHECK(run_cli(bin, "solve", {"--dims", "7", "--s", "-1", "--s_hat", "-1"}, "bad_dims").exit_code == 2);
    CHECK(run_cli(bin, "solve", {"--dims", "64", "--s", "-1"}, "missing").exit_code == 2);
    CHECK(run_cli(bin, "solve", {"--dims", "64", "--s", "-1", "--s_hat", "-1", "--s_hat_file", "x.kwf"}, "two_sources")
              .exit_code == 2);
    CHECK(run_cli(bin, "validate", {"--s_file", "/nonexistent/field.kwf"}, "no_file").exit_code == 2);
    CHECK(run_cli(bin, "solve", {"--dims", "16,16", "--s", "-1", "--s_hat", "-1", "--alpha", "sin(x0);0"},
                  "not_gauduchon")
              .exit_code == 2);
    CHECK(run_cli(bin, "nonsense", {}, "unknown_cmd").exit_code == 2);
}

TEST_CASE("solver failure exits with 3", "[cli]") {
    const auto r = run_cli(bin, "solve",
                           {"--dims", "64", "--s", "-1+0.5*sin(x0)", "--s_hat", "-1", "--kw_maxiter", "1"}, "cap");
    CHECK(r.exit_code == 3);
    CHECK(r.at("status") == "max-iter");
}

TEST_CASE("degenerate parameter", "[cli]") {
    const auto r = run_cli(bin, "degenerate-t", {"--dims", "16", "--n", "2", "--s", "2", "--s_hat", "1"}, "degen");
    REQUIRE(r.exit_code == 0);
    CHECK(kw::io::read_field(r.file("u.kwf"))[3] == Catch::Approx(std::log(2.0)).epsilon(1e-15));
    const auto bad = run_cli(bin, "degenerate-t", {"--dims", "16", "--n", "2", "--s", "-1", "--s_hat", "1"}, "degen_bad");
    CHECK(bad.exit_code == 2);
    CHECK_THAT(bad.at("error"), ContainsSubstring("non-positive ratio"));
    CHECK(run_cli(bin, "degenerate-t", {"--dims", "16", "--n", "2", "--t", "0.5", "--s", "2", "--s_hat", "1"},
                  "degen_not")
              .exit_code == 2);
}

TEST_CASE("remaining commands run", "[cli]") {
    const auto tr = run_cli(bin, "transform", {"--dims", "64", "--s", "-1", "--u", "0.1*sin(x0)", "--n", "2", "--t", "0"},
                            "transform");
    CHECK(tr.exit_code == 0);
    CHECK(std::filesystem::exists(tr.file("s_hat.kwf")));
    CHECK(std::filesystem::exists(tr.file("s2_hat.kwf")));

    const auto gm = run_cli(bin, "gamma-estimate", {"--dims", "16,16", "--c", "-1", "--p", "4", "--samples", "4"}, "gamma");
    CHECK(gm.exit_code == 0);
    CHECK(gm.number("gamma_hat") >= 2.0);
    CHECK(gm.at("gamma_hat.kind") == "heuristic-sampled");

    const auto sf = run_cli(bin, "sufficient", {"--dims", "32", "--phi", "-1", "--c", "-1"}, "sufficient");
    CHECK(sf.exit_code == 0);
    CHECK(sf.at("certified") == "true");

    const auto cc = run_cli(bin, "critical-c", {"--dims", "32", "--phi", "-1"}, "critical");
    CHECK(cc.exit_code == 0);
    CHECK(cc.at("minus_infinity") == "true");
    CHECK(std::filesystem::exists(cc.file("probes.csv")));
}
