#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kBin = URNS_CLI_PATH;

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    std::string tmp = "cli_out.tmp";
    std::string cmd = kBin + " " + args + " >" + tmp + " 2>&1";
    int rc = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WEXITSTATUS(rc);
    std::ifstream in(tmp);
    std::ostringstream ss;
    ss << in.rdbuf();
    res.output = ss.str();
    std::remove(tmp.c_str());
    return res;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("simulate --n 100 --seed 1").exit_code == 2);        // missing theta
    CHECK(run("simulate --theta 0.5 --n 100").exit_code == 2);     // missing seed
    CHECK(run("frobnicate").exit_code == 2);                       // unknown subcommand
    CHECK(run("verify unknown --theta 0.5 --seed 1").exit_code == 2);
    CHECK(run("simulate --theta 0.5 --n 100 --seed 1 --set 1:0").exit_code == 2);
    CHECK(run("simulate --theta 0.5 --n 100 --seed 1 --set zebra").exit_code == 2);
    CHECK(run("text theta no_such_file.txt").exit_code == 3);      // unreadable input
}

TEST_CASE("kernel subcommands print closed-form values") {
    auto r = run("kernel kstar --a 0:1 --b 0:1 --k1 1 --k2 1 --theta 0.5");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("0.4142135623730") != std::string::npos);
    CHECK(r.output.find("closed_form") != std::string::npos);

    auto rq = run("kernel kstar --a 0:1 --b 0:1 --k1 1 --k2 1 --theta 0.5 --quad");
    CHECK(rq.exit_code == 0);
    CHECK(rq.output.find("quadrature") != std::string::npos);

    auto rpi = run("kernel pi --i 1 --j 1 --theta 0.5");
    CHECK(rpi.exit_code == 0);
    CHECK(rpi.output.find("0.41161165235") != std::string::npos);

    auto rf = run("kernel forward --grid 0.1 --theta 0.5");
    CHECK(rf.exit_code == 0);
    // 11x11 grid plus header
    int lines = 0;
    for (char c : rf.output) lines += (c == '\n');
    CHECK(lines == 1 + 11 * 11);

    auto ru = run("kernel ufield --s1 0.5 --t1 0.2 --s2 0.5 --t2 0.2 --theta 0.5");
    CHECK(ru.exit_code == 0);

    auto rbadgrid = run("kernel forward --grid 0.3 --theta 0.5");
    CHECK(rbadgrid.exit_code == 2);
}

TEST_CASE("simulate emits a config echo and a count row") {
    auto r = run("simulate --theta 0.5 --n 5000 --set 0:1 --k 1 --seed 7");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("# theta = 0.5") != std::string::npos);
    CHECK(r.output.find("set,k,mode,count,expectation,standardized") != std::string::npos);
    CHECK(r.output.find("0:1,1,at_least,") != std::string::npos);

    // two-interval union and k=2
    auto r2 = run("simulate --theta 0.5 --n 5000 --set 0:0.25,0.75:1 --k 2 --seed 7");
    CHECK(r2.exit_code == 0);
    CHECK(r2.output.find("\"0:0.25,0.75:1\",2,at_least,") != std::string::npos);
}

TEST_CASE("deterministic outputs for identical flags and seed") {
    std::string f1 = "sim_a.csv", f2 = "sim_b.csv";
    auto r1 = run("simulate --theta 0.5 --n 20000 --set 0:0.5 --k 1 --seed 11 --out " + f1);
    auto r2 = run("simulate --theta 0.5 --n 20000 --set 0:0.5 --k 1 --seed 11 --out " + f2);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    auto c1 = read_file(f1), c2 = read_file(f2);
    CHECK(!c1.empty());
    CHECK(c1 == c2);
    std::remove(f1.c_str());
    std::remove(f2.c_str());

    // worker count must not change verification output values; only the
    // echoed workers flag differs
    auto strip_workers = [](const std::string& s) {
        std::istringstream in(s);
        std::ostringstream out;
        std::string line;
        while (std::getline(in, line))
            if (line.rfind("# workers", 0) != 0) out << line << '\n';
        return out.str();
    };
    auto v1 = run("verify bounds --theta 0.5 --reps 500 --seed 3 --format csv");
    auto v2 = run("verify bounds --theta 0.5 --reps 500 --seed 3 --format csv --workers 3");
    CHECK(strip_workers(v1.output) == strip_workers(v2.output));
}

TEST_CASE("verify subcommands succeed at smoke scale") {
    auto r = run("verify bounds --theta 0.5 --reps 1000 --seed 1");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("verdict: PASS") != std::string::npos);

    auto rc = run("verify clt --theta 0.5 --n 3000 --reps 200 --seed 5 --format json");
    CHECK((rc.exit_code == 0 || rc.exit_code == 1)); // scientific verdict, not usage
    CHECK(rc.output.find("\"experiment\"") != std::string::npos);

    auto rp = run("verify poisson-cov --theta 0.5 --t 300 --reps 2000 --seed 2");
    CHECK(rp.exit_code == 0);

    auto rs = run("verify slln --theta 0.5 --seed 4 --seeds 10 --n-grid 100,1000,5000 "
                  "--band 0.5 --fraction 0.9 --k 1 --set 0.2:0.7");
    CHECK(rs.exit_code == 0);
}

TEST_CASE("text workflow on a temp corpus") {
    std::string corpus = "cli_corpus.tmp";
    {
        std::ofstream out(corpus);
        // deterministic letter soup with a repeated core vocabulary
        for (int i = 0; i < 400; ++i)
            out << "alpha beta gamma delta epsilon word" << (i % 37) << " ";
    }
    auto rt = run("text theta " + corpus);
    CHECK(rt.exit_code == 0);
    CHECK(rt.output.find("theta_hat") != std::string::npos);

    auto rs = run("text scan " + corpus + " --grid 0.1 --resamples 199 --seed 3");
    CHECK(rs.exit_code == 0);
    CHECK(rs.output.find("\"p_value\"") != std::string::npos);
    CHECK(rs.output.find("\"t_n\"") != std::string::npos);

    auto rs2 = run("text scan " + corpus + " --grid 0.1 --resamples 99 --seed 3");
    CHECK(rs2.exit_code == 2); // too few resamples

    auto rs3 = run("text scan " + corpus);
    CHECK(rs3.exit_code == 2); // missing seed

    std::remove(corpus.c_str());
}
