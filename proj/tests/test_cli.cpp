#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hmi/volterra.hpp"

namespace {

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
    const std::string out_file = std::string(HMI_TEST_TMP) + "/cli_stdout.txt";
    const std::string cmd =
        std::string(HMI_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    res.stdout_text = ss.str();
    return res;
}

// all lines except the run-dependent "# timestamp"/"# elapsed_sec" ones
std::vector<std::string> stable_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# timestamp", 0) == 0 || line.rfind("# elapsed_sec", 0) == 0)
            continue;
        lines.push_back(line);
    }
    return lines;
}

std::map<std::string, std::string> config_echo(const std::string& path) {
    std::ifstream in(path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# config ", 0) != 0) continue;
        std::istringstream row(line.substr(9));
        std::string key, value;
        row >> key >> value;
        kv[key] = value;
    }
    return kv;
}

}  // namespace

TEST_CASE("cli: ml spot values") {
    auto res = run_cli("ml --rho 1 --beta 1 --z 1");
    CHECK(res.exit_code == 0);
    CHECK(std::stod(res.stdout_text) == doctest::Approx(2.718281828).epsilon(1e-9));
}

TEST_CASE("cli: solve output matches the library and re-runs byte-identically") {
    const std::string out1 = std::string(HMI_TEST_TMP) + "/solve1.csv";
    const std::string out2 = std::string(HMI_TEST_TMP) + "/solve2.csv";
    const std::string flags =
        "solve --alpha 0.5 --lambda 1 --gamma 0.3 --reaction power:c=1,beta=2 "
        "--h 0.0078125 --horizon 2 --out ";
    CHECK(run_cli(flags + out1).exit_code == 0);
    CHECK(run_cli(flags + out2).exit_code == 0);
    CHECK(stable_lines(out1) == stable_lines(out2));

    // reconstruct the command from the echoed config and re-run: data identical
    const auto echo = config_echo(out1);
    const std::string out3 = std::string(HMI_TEST_TMP) + "/solve3.csv";
    std::string rebuilt = echo.at("subcommand");
    for (const char* key : {"alpha", "lambda", "mu-star", "kappa", "gamma", "reaction",
                            "f", "h", "horizon", "T", "paths", "seed", "event-cap"})
        rebuilt += std::string(" --") + key + " " + echo.at(key);
    rebuilt += " --out " + out3;
    CHECK(run_cli(rebuilt).exit_code == 0);
    auto l1 = stable_lines(out1), l3 = stable_lines(out3);
    // the out path differs only in the config echo of --out, which is not echoed
    CHECK(l1 == l3);

    // spot-check a data row against the library
    hmi::MacroParams p;
    p.alpha = 0.5;
    p.gamma = 0.3;
    const auto grid = hmi::make_grid(0.0078125, 2.0);
    const auto sol =
        hmi::solve_rate(p, hmi::Reaction::power(1.0, 2.0), hmi::Schedule::flat(), grid);
    std::ifstream in(out1);
    std::string line;
    std::size_t row = 0;
    bool checked = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        if (row == 128) {  // t = 1
            double t, forcing, u, r, mi;
            std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &forcing, &u, &r, &mi);
            CHECK(t == doctest::Approx(1.0));
            CHECK(r == doctest::Approx(sol.r[128]).epsilon(1e-10));
            checked = true;
        }
        ++row;
    }
    CHECK(checked);
}

TEST_CASE("cli: config file with flag override") {
    const std::string cfg = std::string(HMI_TEST_TMP) + "/run.cfg";
    {
        std::ofstream out(cfg);
        out << "alpha=0.4\ngamma=0.2\nh=0.015625\nhorizon=1\n";
    }
    const std::string out1 = std::string(HMI_TEST_TMP) + "/cfg1.csv";
    const auto res =
        run_cli("solve --config " + cfg + " --gamma 0.25 --out " + out1);
    CHECK(res.exit_code == 0);
    const auto echo = config_echo(out1);
    CHECK(echo.at("alpha") == "0.4");   // from the file
    CHECK(echo.at("gamma") == "0.25");  // flag wins
}

TEST_CASE("cli: exit codes") {
    CHECK(run_cli("solve --no-such-flag 1").exit_code == 2);
    CHECK(run_cli("solve --alpha 1.5 --out " + std::string(HMI_TEST_TMP) + "/x.csv")
              .exit_code == 2);
    // event cap exceeded maps to the resource exit code
    const auto res = run_cli(
        "simulate --T 500 --paths 4 --event-cap 10 --h 0.25 --horizon 2 --out " +
        std::string(HMI_TEST_TMP) + "/cap.csv");
    CHECK(res.exit_code == 3);
    CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("cli: bounds and fit subcommands run and report") {
    const std::string out = std::string(HMI_TEST_TMP) + "/bounds.csv";
    CHECK(run_cli("bounds --gamma 0.1 --h 0.015625 --horizon 2 --adomian-order 2 --out " +
                  out)
              .exit_code == 0);
    std::ifstream in(out);
    std::string header;
    bool found = false;
    while (std::getline(in, header))
        if (header.rfind("t,mi_lower,mi_upper,mi_adomian_2", 0) == 0) found = true;
    CHECK(found);

    const auto fit = run_cli("fit-volume --gamma 0.3 --h 0.001953125 --horizon 1 --out " +
                             std::string(HMI_TEST_TMP) + "/fitv.csv");
    CHECK(fit.exit_code == 0);
    CHECK(fit.stdout_text.find("slope") != std::string::npos);
}

TEST_CASE("cli: simulate writes mean, stderr, price paths and event dumps") {
    const std::string out = std::string(HMI_TEST_TMP) + "/sim.csv";
    const std::string pout = std::string(HMI_TEST_TMP) + "/price.csv";
    const std::string dump_dir = std::string(HMI_TEST_TMP) + "/events";
    if (std::system(("mkdir -p " + dump_dir).c_str()) != 0) FAIL("mkdir failed");
    const auto res = run_cli("simulate --T 300 --paths 16 --h 0.125 --horizon 2 --seed 5 "
                             "--dump-events " +
                             dump_dir + " --price-out " + pout + " --out " + out);
    CHECK(res.exit_code == 0);
    std::ifstream in(pout);
    std::string line;
    bool has_data = false;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#' && line.rfind("t,", 0) != 0) has_data = true;
    CHECK(has_data);

    // per-path dumps carry (stream tag, time) rows with increasing times per stream
    std::ifstream ev(dump_dir + "/path_0.csv");
    REQUIRE(ev.good());
    double last_o = -1.0;
    bool any_o = false;
    while (std::getline(ev, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("stream", 0) == 0) continue;
        double tag, t;
        std::sscanf(line.c_str(), "%lf,%lf", &tag, &t);
        if (tag == 2) {  // metaorder stream
            CHECK(t > last_o);
            last_o = t;
            any_o = true;
        }
    }
    CHECK(any_o);
}

TEST_CASE("cli: reduced-scale invariant suite") {
    const auto res = run_cli("check --seed 3");
    CHECK(res.exit_code == 0);
    CHECK(res.stdout_text.find("FAIL") == std::string::npos);
}
