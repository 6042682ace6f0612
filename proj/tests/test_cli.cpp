#include <catch2/catch.hpp>

#include "clonecurve/formats.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

using namespace clonecurve;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args) {
    std::string cmd = std::string(CLONECURVE_BIN) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult result;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe))
        result.output.append(buf, n);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("clonecurve-cli-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& sub = "") const {
        return sub.empty() ? path.string() : (path / sub).string();
    }
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

} // namespace

TEST_CASE("gen is byte-identical across runs") {
    TempDir tmp;
    auto r1 = run_cli("gen --seed 1 --n 200 --out " + tmp.str("g1"));
    auto r2 = run_cli("gen --seed 1 --n 200 --out " + tmp.str("g2"));
    CHECK(r1.exit_code == 0);
    CHECK(r2.exit_code == 0);
    CHECK(slurp(tmp.path / "g1/corpus.blocks") == slurp(tmp.path / "g2/corpus.blocks"));
    CHECK(slurp(tmp.path / "g1/ground_truth.csv") == slurp(tmp.path / "g2/ground_truth.csv"));

    auto r3 = run_cli("gen --seed 2 --n 200 --out " + tmp.str("g3"));
    CHECK(r3.exit_code == 0);
    CHECK(slurp(tmp.path / "g1/corpus.blocks") != slurp(tmp.path / "g3/corpus.blocks"));
}

TEST_CASE("detect with a preset writes the full report set") {
    TempDir tmp;
    REQUIRE(run_cli("gen --seed 7 --n 150 --out " + tmp.str("gen")).exit_code == 0);
    auto r = run_cli("detect --corpus " + tmp.str("gen/corpus.blocks") +
                     " --preset sourcerercc-java --mode curve-optimized --out " + tmp.str("out"));
    CHECK(r.exit_code == 0);

    nlohmann::json report = nlohmann::json::parse(slurp(tmp.path / "out/report.json"));
    CHECK(report["mode"] == "curve-optimized");
    CHECK(report["per_instance"].size() == 8);
    CHECK(report["total_blocks"] == 150);

    std::string pairs_csv = slurp(tmp.path / "out/pairs.csv");
    CHECK(pairs_csv.rfind("file_a,", 0) == 0);
    CHECK(fs::exists(tmp.path / "out/scatter.csv"));
    CHECK_FALSE(fs::exists(tmp.path / "out/warnings.txt"));
}

TEST_CASE("detect with a single config runs one instance") {
    TempDir tmp;
    REQUIRE(run_cli("gen --seed 9 --n 80 --out " + tmp.str("gen")).exit_code == 0);
    auto r = run_cli("detect --corpus " + tmp.str("gen/corpus.blocks") + " --single 750,19 --out " +
                     tmp.str("out"));
    CHECK(r.exit_code == 0);
    nlohmann::json report = nlohmann::json::parse(slurp(tmp.path / "out/report.json"));
    CHECK(report["mode"] == "single");
    CHECK(report["per_instance"].size() == 1);
    CHECK(report["per_instance"][0]["st"] == 750);
}

TEST_CASE("detect on an empty directory writes an empty report") {
    TempDir tmp;
    fs::create_directories(tmp.path / "empty");
    auto r = run_cli("detect --corpus " + tmp.str("empty") + " --preset cloneworks-java --out " +
                     tmp.str("out"));
    CHECK(r.exit_code == 0);
    nlohmann::json report = nlohmann::json::parse(slurp(tmp.path / "out/report.json"));
    CHECK(report["pair_count"] == 0);
    CHECK(report["total_blocks"] == 0);
}

TEST_CASE("detect reports a missing corpus as fatal") {
    TempDir tmp;
    auto r = run_cli("detect --corpus " + tmp.str("nowhere") + " --preset sourcerercc-java --out " +
                     tmp.str("out"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("NoSuchCorpus") != std::string::npos);
}

TEST_CASE("detect flags skipped files with exit code 2 and a warnings file") {
    TempDir tmp;
    fs::create_directories(tmp.path / "src");
    spit(tmp.path / "src/good.java", "class G { void m() { a(); b(); } }\n");
    spit(tmp.path / "src/bad.java", "class B { void m() {\n");
    auto r = run_cli("detect --corpus " + tmp.str("src") + " --single 700,1 --out " +
                     tmp.str("out"));
    CHECK(r.exit_code == 2);
    std::string warnings = slurp(tmp.path / "out/warnings.txt");
    CHECK(warnings.find("UnbalancedBraces") != std::string::npos);
    CHECK(warnings.find("[file skipped]") != std::string::npos);
}

TEST_CASE("plan reproduces the two-point worked example") {
    TempDir tmp;
    spit(tmp.path / "curve.txt", "750,40\n700,60\n");
    auto r = run_cli("plan --curve " + tmp.str("curve.txt"));
    CHECK(r.exit_code == 0);
    CHECK(r.output == "750,40,78\n700,60\n");
}

TEST_CASE("plan prints the preset tables") {
    auto r = run_cli("plan --preset sourcerercc-java");
    CHECK(r.exit_code == 0);
    CHECK(r.output == "750,19,30\n730,24,45\n710,34,49\n700,36,78\n650,56,98\n600,65,238\n"
                      "550,144,389\n500,215\n");

    auto cw = run_cli("plan --preset cloneworks-java");
    CHECK(cw.exit_code == 0);
    CHECK(cw.output == "770,19,27\n750,22,30\n720,24,40\n710,30,47\n700,35,70\n650,50,109\n"
                       "600,72,231\n550,140\n");
}

TEST_CASE("plan rejects non-monotone and pre-bounded curves") {
    TempDir tmp;
    spit(tmp.path / "bad.txt", "750,19\n750,24\n");
    auto r = run_cli("plan --curve " + tmp.str("bad.txt"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("NonMonotoneST") != std::string::npos);

    spit(tmp.path / "bounded.txt", "750,40,78\n700,60\n");
    auto r2 = run_cli("plan --curve " + tmp.str("bounded.txt"));
    CHECK(r2.exit_code == 1);
    CHECK(r2.output.find("AlreadyBounded") != std::string::npos);
}

TEST_CASE("calibrate recovers a planted curve from a labels file") {
    TempDir tmp;
    std::vector<LabeledPair> pairs;
    auto in_region = [](std::uint64_t size, permille sim) {
        return (sim >= 800 && size >= 30) || (sim >= 700 && size >= 80);
    };
    for (std::uint64_t size = 19; size <= 200; ++size)
        for (permille sim = 650; sim <= 1000; sim += 25)
            pairs.push_back({size, sim, in_region(size, sim)});
    {
        std::ofstream out(tmp.path / "labels.csv", std::ios::binary);
        write_labeled_pairs(out, pairs);
    }
    auto r = run_cli("calibrate --labels " + tmp.str("labels.csv") +
                     " --grid 800,700 --target 1.0 --min-ltlt 19");
    CHECK(r.exit_code == 0);
    CHECK(r.output == "800,30,98\n700,80\n");
}

TEST_CASE("calibrate fails cleanly on an empty labels file") {
    TempDir tmp;
    spit(tmp.path / "labels.csv", "min_size,similarity_permille,label\n");
    auto r = run_cli("calibrate --labels " + tmp.str("labels.csv"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("EmptyInput") != std::string::npos);
}

TEST_CASE("bench compares the three modes and asserts losslessness") {
    TempDir tmp;
    REQUIRE(run_cli("gen --seed 12 --n 150 --out " + tmp.str("gen")).exit_code == 0);
    auto r = run_cli("bench --corpus " + tmp.str("gen/corpus.blocks") +
                     " --preset sourcerercc-java --out " + tmp.str("bench"));
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("curve-raw") != std::string::npos);
    CHECK(r.output.find("curve-optimized") != std::string::npos);
    CHECK(r.output.find("pair sets equal") != std::string::npos);
    CHECK(r.output.find("detect time delta") != std::string::npos);

    nlohmann::json bench = nlohmann::json::parse(slurp(tmp.path / "bench/bench.json"));
    CHECK(bench["raw_equals_optimized"] == true);
    REQUIRE(bench["modes"].size() == 3);
}

TEST_CASE("bench on two identical blocks reports one pair in every mode") {
    TempDir tmp;
    std::vector<CodeBlock> blocks;
    for (std::uint64_t id = 0; id < 2; ++id) {
        CodeBlock b;
        b.id = id;
        b.file_path = "twin/" + std::to_string(id);
        for (int t = 0; t < 40; ++t)
            b.bag.add("tok" + std::to_string(t));
        b.size = b.bag.total();
        blocks.push_back(b);
    }
    write_block_file(tmp.path / "twins.blocks", blocks);
    auto r = run_cli("bench --corpus " + tmp.str("twins.blocks") + " --preset sourcerercc-java");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("pair sets equal (1 pairs)") != std::string::npos);
    CHECK(r.output.find("curve vs single: 1 vs 1 pairs") != std::string::npos);
}

TEST_CASE("the parallelism environment variable only affects scheduling") {
    TempDir tmp;
    REQUIRE(run_cli("gen --seed 21 --n 100 --out " + tmp.str("gen")).exit_code == 0);
    std::string detect = "detect --corpus " + tmp.str("gen/corpus.blocks") +
                         " --preset sourcerercc-java --out ";
    auto serial = run_cli(detect + tmp.str("s"));
    CHECK(serial.exit_code == 0);
    RunResult parallel;
    {
        std::string cmd = "CLONECURVE_JOBS=4 " + std::string(CLONECURVE_BIN) + " " + detect +
                          tmp.str("p") + " 2>&1";
        FILE* pipe = popen(cmd.c_str(), "r");
        REQUIRE(pipe != nullptr);
        char buf[4096];
        while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe))
            parallel.output.append(buf, n);
        parallel.exit_code = WEXITSTATUS(pclose(pipe));
    }
    CHECK(parallel.exit_code == 0);
    CHECK(slurp(tmp.path / "s/pairs.csv") == slurp(tmp.path / "p/pairs.csv"));
    CHECK(slurp(tmp.path / "s/scatter.csv") == slurp(tmp.path / "p/scatter.csv"));
}

TEST_CASE("detect tokenizes real source directories") {
    TempDir tmp;
    fs::create_directories(tmp.path / "src");
    std::string method_body;
    for (int i = 0; i < 30; ++i)
        method_body += "        stmt" + std::to_string(i) + "();\n";
    spit(tmp.path / "src/A.java", "class A {\n    void one() {\n" + method_body + "    }\n}\n");
    spit(tmp.path / "src/B.java", "class B {\n    void two() {\n" + method_body + "    }\n}\n");
    auto r = run_cli("detect --corpus " + tmp.str("src") + " --single 900,19 --out " +
                     tmp.str("out"));
    CHECK(r.exit_code == 0);
    nlohmann::json report = nlohmann::json::parse(slurp(tmp.path / "out/report.json"));
    CHECK(report["total_blocks"] == 2);
    CHECK(report["pair_count"] == 1);
    std::string pairs_csv = slurp(tmp.path / "out/pairs.csv");
    CHECK(pairs_csv.find("A.java") != std::string::npos);
    CHECK(pairs_csv.find("B.java") != std::string::npos);
    CHECK(pairs_csv.find("1000,30") != std::string::npos);
}
