#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

// Exercises the installed binary: exit codes, config-file precedence and
// the usage errors that must name the offending field.

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("INQ_CLI_PATH");
    REQUIRE(p != nullptr);
    return p;
}

struct RunResult {
    int exit_code;
    std::string output; // stdout + stderr
};

RunResult run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 512> buf;
    while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / "inq_cli_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string p(const std::string& name) const { return (dir / name).string(); }
};

} // namespace

TEST_CASE("no subcommand and unknown flags exit nonzero") {
    CHECK(run("").exit_code != 0);
    CHECK(run("--bogus").exit_code != 0);
    CHECK(run("trainx").exit_code != 0);
}

TEST_CASE("missing input files exit nonzero with a message") {
    Scratch s;
    RunResult r = run("train --data-train " + s.p("absent.inqd") + " --out " + s.p("o"));
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("error") != std::string::npos);

    r = run("eval --model " + s.p("absent.inqm") + " --data " + s.p("absent.inqd"));
    CHECK(r.exit_code != 0);
}

TEST_CASE("invalid config values name the field") {
    Scratch s;
    {
        std::ofstream f(s.p("bad.conf"));
        f << "sgd.lr = fast\n";
    }
    RunResult r = run("train --config " + s.p("bad.conf") + " --data-train x --out " + s.p("o"));
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("sgd.lr") != std::string::npos);

    {
        std::ofstream f(s.p("bad2.conf"));
        f << "net = hypercube:4,2\n";
    }
    RunResult r2 = run("gen-data --out " + s.p("d") + " --n-train 20 --n-test 10 && " + cli_path() +
                       " train --config " + s.p("bad2.conf") + " --data-train " +
                       s.p("d/train.inqd") + " --out " + s.p("o2"));
    CHECK(r2.exit_code != 0);
    CHECK(r2.output.find("net") != std::string::npos);
}

TEST_CASE("config file values apply and flags override them") {
    Scratch s;
    CHECK(run("gen-data --kind blobs --classes 3 --n-train 90 --n-test 30 --seed 2 --out " +
              s.p("data"))
              .exit_code == 0);
    {
        std::ofstream f(s.p("exp.conf"));
        f << "data.train = " << s.p("data/train.inqd") << "\n";
        f << "net = linear:2,3\n";
        f << "epochs = 3\n";
        f << "sgd.lr = 0.05\n";
        f << "seed = 4\n";
        f << "out = " << s.p("runA") << "\n";
    }
    CHECK(run("train --config " + s.p("exp.conf")).exit_code == 0);
    CHECK(fs::exists(s.p("runA/baseline.inqm")));

    // flag overrides the out directory from the file
    CHECK(run("train --config " + s.p("exp.conf") + " --out " + s.p("runB")).exit_code == 0);
    CHECK(fs::exists(s.p("runB/baseline.inqm")));

    // resolved provenance records the effective values
    std::ifstream prov(s.p("runB/config.txt"));
    std::string text((std::istreambuf_iterator<char>(prov)), std::istreambuf_iterator<char>());
    CHECK(text.find("net=linear:2,3") != std::string::npos);
    CHECK(text.find("out=" + s.p("runB")) != std::string::npos);
}

TEST_CASE("quantize-evaluate round trip through the CLI") {
    Scratch s;
    CHECK(run("gen-data --kind blobs --classes 3 --n-train 120 --n-test 60 --seed 3 --out " +
              s.p("data"))
              .exit_code == 0);
    CHECK(run("train --data-train " + s.p("data/train.inqd") + " --net mlp:2,16,3 --epochs 10 "
              "--lr 0.05 --seed 1 --out " +
              s.p("base"))
              .exit_code == 0);
    CHECK(run("inq --baseline " + s.p("base/baseline.inqm") + " --data-train " +
              s.p("data/train.inqd") + " --bits 5 --schedule 0.5,1 --epochs-per-step 2 "
              "--lr 0.02 --seed 1 --out " +
              s.p("q"))
              .exit_code == 0);

    RunResult ev = run("eval --model " + s.p("q/quantized.inqm") + " --data " +
                       s.p("data/test.inqd") + " --baseline " + s.p("base/baseline.inqm") +
                       " --crosscheck");
    CHECK(ev.exit_code == 0);
    CHECK(ev.output.find("cross-check") != std::string::npos);
    CHECK(ev.output.find("baseline top-1") != std::string::npos);

    RunResult st = run("stats --model " + s.p("q/quantized.inqm") + " --csv " + s.p("reports"));
    CHECK(st.exit_code == 0);
    CHECK(st.output.find("Total") != std::string::npos);
    CHECK(fs::exists(s.p("reports/distribution.csv")));
    CHECK(fs::exists(s.p("reports/compression.csv")));

    // stats on a float model is an error
    CHECK(run("stats --model " + s.p("base/baseline.inqm")).exit_code != 0);

    CHECK(run("pack --model " + s.p("base/baseline.inqm") + " --bits 4 --out " + s.p("p.inqm"))
              .exit_code == 0);
    CHECK(run("unpack --model " + s.p("p.inqm") + " --out " + s.p("u.inqm")).exit_code == 0);
    // unpack of a float model is an error
    CHECK(run("unpack --model " + s.p("base/baseline.inqm") + " --out " + s.p("x.inqm"))
              .exit_code != 0);
}
