#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
};

CmdResult run_cmd(const std::string& args) {
    const std::string cmd = std::string(BENCH_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult res;
    std::array<char, 4096> buf;
    while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe)) {
        res.out.append(buf.data(), got);
    }
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Strips the trailing wall_ms column from every CSV line.
std::string drop_wall_ms(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.rfind(',');
        out << (pos == std::string::npos ? line : line.substr(0, pos)) << '\n';
    }
    return out.str();
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

fs::path temp_dir() {
    const fs::path p = fs::temp_directory_path() / "ssqn_cli_test";
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("gen-data writes n lines, deterministically") {
    const fs::path dir = temp_dir();
    const fs::path f1 = dir / "gen1.libsvm", f2 = dir / "gen2.libsvm";
    const std::string flags = "gen-data --n 1000 --d 50 --density 0.05 --seed 7 --out ";
    CHECK(run_cmd(flags + f1.string()).exit_code == 0);
    CHECK(run_cmd(flags + f2.string()).exit_code == 0);
    const std::string a = slurp(f1);
    CHECK(count_lines(a) == 1000);
    CHECK(a == slurp(f2));
}

TEST_CASE("gen-data rejects density 0 with exit code 2") {
    CHECK(run_cmd("gen-data --n 10 --d 5 --density 0 --out /dev/null").exit_code == 2);
}

TEST_CASE("unknown flag and missing dataset are usage errors") {
    CHECK(run_cmd("run --no-such-flag 1").exit_code == 2);
    CHECK(run_cmd("run --algo spider_sqn --K 3").exit_code == 2);  // no data source
    CHECK(run_cmd("run --synthetic 50,5,0.5 --algo nope --K 3").exit_code == 2);
}

TEST_CASE("run: determinism except wall_ms, and row count") {
    const std::string flags =
        "run --synthetic 200,20,0.1 --problem svm --algo spider_sqn_med "
        "--K 20 --batch 8 --q 10 --seed 5 --checkpoint-every 6";
    const CmdResult a = run_cmd(flags);
    const CmdResult b = run_cmd(flags);
    REQUIRE(a.exit_code == 0);
    CHECK(drop_wall_ms(a.out) == drop_wall_ms(b.out));
    // header + rows at k = 0, 6, 12, 18
    CHECK(count_lines(a.out) == 1 + 20 / 6 + 1);
}

TEST_CASE("run: K=0 emits a single initial row") {
    const CmdResult r =
        run_cmd("run --synthetic 50,8,0.3 --problem svm --algo spider_sqn --K 0");
    REQUIRE(r.exit_code == 0);
    CHECK(count_lines(r.out) == 2);  // header + k=0
    CHECK(r.out.find("spider_sqn,0,0,0,0,1,") != std::string::npos);  // f(0) = 1 for SVM
}

TEST_CASE("run: divergence exits 3") {
    const CmdResult r = run_cmd(
        "run --synthetic 50,8,0.3 --problem svm --algo sgd --eta 1e200 --K 5 "
        "--q 5 --batch 4 --checkpoint-every 1");
    CHECK(r.exit_code == 3);
}

TEST_CASE("plan file drives bench; flags override plan") {
    const fs::path dir = temp_dir();
    const fs::path plan = dir / "plan.txt";
    const fs::path out1 = dir / "bench_a", out2 = dir / "bench_b";
    {
        std::ofstream p(plan);
        p << "# desk plan\n"
          << "synthetic=150,15,0.1\n"
          << "problem=svm\n"
          << "algos=spider_sqn,spider_boost\n"
          << "seeds=1,2,3\n"
          << "K=20\nbatch=8\nq=10\ncheckpoint-every=10\n"
          << "out=" << out1.string() << "\n";
    }
    const CmdResult r = run_cmd("bench --plan " + plan.string());
    REQUIRE(r.exit_code == 0);

    // 2 algorithms x 3 seeds -> 6 trace files + summary with 6 + 2 median rows.
    std::size_t traces = 0;
    for (const auto& e : fs::directory_iterator(out1)) {
        traces += e.path().filename() != "summary.csv";
    }
    CHECK(traces == 6);
    const std::string summary = slurp(out1 / "summary.csv");
    CHECK(count_lines(summary) == 1 + 6 + 2);

    // Median oracle: 3 seeds -> the middle per-seed final per algorithm.
    std::stringstream ss(summary);
    std::string line;
    std::getline(ss, line);  // header
    std::map<std::string, std::vector<double>> finals;
    std::map<std::string, std::string> medians;
    while (std::getline(ss, line)) {
        std::stringstream ls(line);
        std::string algo, seed, f;
        std::getline(ls, algo, ',');
        std::getline(ls, seed, ',');
        std::getline(ls, f, ',');
        if (seed == "median") medians[algo] = f;
        else finals[algo].push_back(std::stod(f));
    }
    REQUIRE(medians.size() == 2);
    for (auto& [algo, vals] : finals) {
        REQUIRE(vals.size() == 3);
        std::sort(vals.begin(), vals.end());
        CHECK(std::stod(medians.at(algo)) == vals[1]);
    }

    // Rerun: byte-identical summary (it carries no wall_ms column).
    const CmdResult r2 = run_cmd("bench --plan " + plan.string() + " --out " + out2.string());
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(out2 / "summary.csv") == summary);

    // Flag precedence: overriding seeds shrinks the run set.
    const fs::path out3 = dir / "bench_c";
    const CmdResult r3 =
        run_cmd("bench --plan " + plan.string() + " --seeds 9 --out " + out3.string());
    REQUIRE(r3.exit_code == 0);
    CHECK(count_lines(slurp(out3 / "summary.csv")) == 1 + 2 + 2);
}

TEST_CASE("audit gate: clean pass, injections fail") {
    const CmdResult clean = run_cmd("audit");
    CHECK(clean.exit_code == 0);
    CHECK(clean.out.find("FAIL") == std::string::npos);
    CHECK(clean.out.find("margin") != std::string::npos);

    struct Case {
        const char* inject;
        const char* expected_fail;
    };
    for (const Case c : {Case{"damping-off", "damping_floor"},
                         Case{"gamma-floor-off", "gamma_floor"},
                         Case{"spider-batch", "spider_same_batch"}}) {
        const CmdResult r = run_cmd(std::string("audit --inject ") + c.inject);
        CHECK(r.exit_code == 1);
        CHECK(r.out.find(std::string("FAIL  ") + c.expected_fail) != std::string::npos);
    }
    CHECK(run_cmd("audit --inject bogus").exit_code == 2);
}
