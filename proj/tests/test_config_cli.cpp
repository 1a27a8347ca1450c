#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include <lrb/cli.hpp>
#include <lrb/config.hpp>

using namespace lrb;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"({
  "schema": "lrb-config",
  "version": 1,
  "output": {"dir": "unused", "format": "csv"},
  "threads": 2,
  "scenarios": [
    {
      "id": "a",
      "design": {"n": 40, "p": 60, "kind": "ar1", "rho": 0.2},
      "model": {"support_size": 3, "magnitude": 1.0},
      "noise": {"kind": "gaussian", "sigma": 0.3},
      "lambda": {"rule": "universal_multiple", "value": 3.0},
      "c_values": [3.0, 4.0],
      "replications": 50,
      "seed": 8,
      "t0": [{"name": "S0", "kind": "support"}, {"name": "x", "kind": "explicit", "indices": [5, 0, 1, 2]}],
      "bounds": ["cor35", "thm31"]
    }
  ]
}
)";

std::string replace(std::string text, const std::string& from, const std::string& to)
{
    const auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    if (pos != std::string::npos) text.replace(pos, from.size(), to);
    return text;
}

fs::path temp_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("lrb_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& path, const std::string& text)
{
    std::ofstream(path) << text;
    return path;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr)
{
    args.insert(args.begin(), "lrb");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

int line_of_error(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

} // namespace

TEST(Config, ParsesAllFields)
{
    const RunConfig cfg = parse_config(kBase);
    ASSERT_EQ(cfg.scenarios.size(), 1u);
    const Scenario& s = cfg.scenarios[0];
    EXPECT_EQ(s.id, "a");
    EXPECT_EQ(s.design.kind, DesignKind::ar1);
    EXPECT_EQ(s.design.rho, 0.2);
    EXPECT_EQ(s.c_values, (std::vector<double>{3.0, 4.0}));
    EXPECT_EQ(s.t0[1].indices, (IndexSet{0, 1, 2, 5}));
    EXPECT_EQ(s.t0[1].kind, T0Kind::explicit_set);
    EXPECT_EQ(cfg.threads, 2);
}

TEST(Config, RoundTrip)
{
    const RunConfig cfg = parse_config(kBase);
    const RunConfig back = config_from_json(to_json(cfg));
    EXPECT_EQ(back, cfg);
    EXPECT_EQ(to_json(back), to_json(cfg));
    for (const auto& entry : fs::directory_iterator(LRB_PRESET_DIR)) {
        const RunConfig preset = parse_config(slurp(entry.path()));
        EXPECT_EQ(config_from_json(to_json(preset)), preset) << entry.path();
    }
}

TEST(Config, ErrorsCarryLines)
{
    // c = 2 in a thm31 scenario: the "c_values" line (13).
    const std::string c2 = replace(kBase, "[3.0, 4.0]", "[3.0, 2.0]");
    EXPECT_EQ(line_of_error(c2), 13);
    try {
        parse_config(c2);
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.pointer(), "/scenarios/0/c_values/1");
        EXPECT_NE(std::string(e.what()).find("c > 2"), std::string::npos);
    }
    // Unknown key inside design (line 9).
    EXPECT_EQ(line_of_error(replace(kBase, "\"rho\": 0.2", "\"rho\": 0.2, \"colour\": 1")), 9);
    // Missing field reported at its parent object.
    EXPECT_EQ(line_of_error(replace(kBase, "\"replications\": 50,", "")), 7);
    // Syntax error: the stray comma on line 5.
    EXPECT_EQ(line_of_error(replace(kBase, "\"threads\": 2,", "\"threads\": 2,,")), 5);
    // Duplicate ids.
    std::string dup = kBase;
    const auto start = dup.find("    {\n      \"id\"");
    const auto end = dup.find("\n  ]");
    dup.insert(end, ",\n" + dup.substr(start, end - start));
    EXPECT_THROW(parse_config(dup), ConfigError);
    EXPECT_THROW(parse_config(replace(kBase, "\"version\": 1", "\"version\": 2")), ConfigError);
    EXPECT_THROW(parse_config(replace(kBase, "\"ar1\"", "\"banded\"")), ConfigError);
}

TEST(Config, PointerLineScanner)
{
    const std::string text = "{\n \"a\": [\n  1,\n  {\"b\": 2}\n ],\n \"c/d\": 3\n}";
    const auto lines = json_pointer_lines(text);
    EXPECT_EQ(lines.at(""), 1);
    EXPECT_EQ(lines.at("/a"), 2);
    EXPECT_EQ(lines.at("/a/0"), 3);
    EXPECT_EQ(lines.at("/a/1/b"), 4);
    EXPECT_EQ(lines.at("/c~1d"), 6);
    EXPECT_EQ(line_for_pointer(lines, "/a/1/zzz"), 4);
}

TEST(Cli, RunWritesOutputsAndIsThreadIndependent)
{
    const fs::path dir = temp_dir("run");
    const fs::path cfg = write_file(dir / "cfg.json", kBase);
    std::string out;
    ASSERT_EQ(run_cli({"run", "--config", cfg.string(), "--out-dir", (dir / "t1").string(), "--threads", "1"}, &out), 0)
        << out;
    ASSERT_EQ(run_cli({"run", "-q", "--config", cfg.string(), "--out-dir", (dir / "t3").string(), "--threads", "3"}), 0);
    EXPECT_NE(out.find("PASS"), std::string::npos);
    EXPECT_EQ(slurp(dir / "t1" / "summary.json"), slurp(dir / "t3" / "summary.json"));
    EXPECT_EQ(slurp(dir / "t1" / "reps_a.csv"), slurp(dir / "t3" / "reps_a.csv"));

    const auto summary = nlohmann::json::parse(slurp(dir / "t1" / "summary.json"));
    EXPECT_EQ(summary["scenarios"][0]["summary"]["certified"], 50);
    EXPECT_FALSE(summary.dump().find("threads") != std::string::npos);
}

TEST(Cli, RepCsvParsesBackLosslessly)
{
    const fs::path dir = temp_dir("csv");
    const fs::path cfg = write_file(dir / "cfg.json", kBase);
    ASSERT_EQ(run_cli({"run", "-q", "--config", cfg.string(), "--out-dir", dir.string(), "--format", "json"}), 0);
    ASSERT_EQ(run_cli({"run", "-q", "--config", cfg.string(), "--out-dir", (dir / "c").string()}), 0);
    const auto reps = nlohmann::json::parse(slurp(dir / "reps_a.json"));

    std::ifstream in(dir / "c" / "reps_a.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "scenario_id,rep,c,lambda_L,E_size,H,delta_gap,pred_err_lasso,pred_err_refined,E_empty,E_eq_S0,"
                    "E_in_T0_0,E_in_T0_1");
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        ASSERT_EQ(f.size(), 13u);
        const int rep = std::stoi(f[1]);
        const int ci = rows % 2;
        const auto& rr = reps[rep]["per_c"][ci];
        EXPECT_EQ(parse_double(f[2]), rr["c"].get<double>());
        EXPECT_EQ(parse_double(f[5]), rr["H"].get<double>());
        EXPECT_EQ(parse_double(f[6]), rr["delta_gap"].get<double>());
        EXPECT_EQ(parse_double(f[7]), rr["pred_err_lasso"].get<double>());
        ++rows;
    }
    EXPECT_EQ(rows, 100);
}

TEST(Cli, ConfigErrorsExitTwo)
{
    const fs::path dir = temp_dir("err");
    const fs::path bad = write_file(dir / "bad.json", replace(kBase, "[3.0, 4.0]", "[2.0]"));
    std::string err;
    EXPECT_EQ(run_cli({"run", "--config", bad.string(), "--out-dir", dir.string()}, nullptr, &err), 2);
    EXPECT_NE(err.find("bad.json:13:"), std::string::npos) << err;
    EXPECT_EQ(run_cli({"run", "--config", (dir / "missing.json").string()}), 2);
    EXPECT_EQ(run_cli({"run"}), 2);
    EXPECT_EQ(run_cli({"frobnicate"}), 2);
    EXPECT_EQ(run_cli({"verify", "--only", "nope"}), 2);
}

TEST(Cli, UnwritableOutputIsConfigError)
{
    const fs::path dir = temp_dir("rt");
    const fs::path cfg = write_file(dir / "cfg.json", kBase);
    EXPECT_EQ(run_cli({"run", "-q", "--config", cfg.string(), "--out-dir", "/proc/lrb_no_such_dir"}), 2);
}

TEST(Cli, VerifyFilterAndFault)
{
    std::string out;
    EXPECT_EQ(run_cli({"verify", "--only", "gaussian-max"}, &out), 0);
    EXPECT_NE(out.find("gaussian-max"), std::string::npos);
    EXPECT_EQ(out.find("factors"), std::string::npos);
    EXPECT_EQ(run_cli({"verify", "--only", "sign-alignment", "--inject-sign-fault"}, &out), 1);
    EXPECT_NE(out.find("sign-alignment"), std::string::npos);
    EXPECT_NE(out.find("FAIL"), std::string::npos);
    EXPECT_EQ(run_cli({"verify"}, &out), 0) << out;
}

TEST(Cli, SweepSinglePointMatchesRun)
{
    const fs::path dir = temp_dir("sweep");
    const fs::path cfg = write_file(dir / "cfg.json", kBase);
    ASSERT_EQ(run_cli({"run", "-q", "--config", cfg.string(), "--out-dir", (dir / "run").string()}), 0);
    ASSERT_EQ(run_cli({"sweep", "-q", "--config", cfg.string(), "--out-dir", (dir / "sw").string(),
                       "--lambda-multiples", "3", "--c-values", "3,4"}),
              0);
    const auto summary = nlohmann::json::parse(slurp(dir / "run" / "summary.json"));
    std::ifstream in(dir / "sw" / "sweep.csv");
    std::string line;
    std::getline(in, line);
    for (int k = 0; k < 2; ++k) {
        ASSERT_TRUE(std::getline(in, line));
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        const auto& pc = summary["scenarios"][0]["summary"]["per_c"][k];
        EXPECT_EQ(parse_double(f[5]), pc["dmse"]["mean"].get<double>());
        EXPECT_EQ(parse_double(f[6]), pc["dmse"]["se"].get<double>());
        const auto& v = summary["scenarios"][0]["verdicts"][2 * k];
        EXPECT_EQ(v["check"], "cor35");
        EXPECT_EQ(parse_double(f[9]), v["bound"].get<double>());
    }
}

TEST(Cli, SweepMarksUniversalAndUsesSmallCBound)
{
    const fs::path dir = temp_dir("sweep2");
    const fs::path cfg = write_file(dir / "cfg.json", replace(kBase, "\"replications\": 50", "\"replications\": 30"));
    ASSERT_EQ(run_cli({"sweep", "-q", "--config", cfg.string(), "--out-dir", dir.string(), "--lambda-multiples",
                       "0.5,1,2", "--c-values", "1.78,3"}),
              0);
    const std::string csv = slurp(dir / "sweep.csv");
    EXPECT_NE(csv.find("a,1,"), std::string::npos);
    int universal = 0, thm314 = 0;
    std::stringstream ss(csv);
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line)) {
        if (line.find(",1,1.78,") != std::string::npos || line.find(",1,3,") != std::string::npos) ++universal;
        if (line.find("thm314") != std::string::npos) ++thm314;
    }
    EXPECT_EQ(universal, 2);
    EXPECT_EQ(thm314, 3);
}

TEST(Cli, BoundsCommand)
{
    const fs::path dir = temp_dir("bounds");
    const fs::path in = write_file(dir / "in.json", R"({"lambda_L": 0.1, "c": 3, "n": 200, "p": 500, "sigma": 0.1,
        "p_nonempty": 1, "exp_max_full": 0.02, "clusters": 8, "delta": 0.2})");
    std::string out;
    ASSERT_EQ(run_cli({"bounds", "--config", in.string(), "--out-dir", dir.string()}, &out), 0);
    const auto j = nlohmann::json::parse(out);
    EXPECT_NEAR(j["cor35"].get<double>(), bound_cor35(0.1, 3, 1, 0.02), 1e-16);
    EXPECT_NEAR(j["two_step_bound"].get<double>(), two_step_bound(8, 500, 200, 0.1, 0.2), 1e-16);
    EXPECT_TRUE(fs::exists(dir / "bounds.json"));
    const fs::path bad = write_file(dir / "bad.json", "{\"lambda_L\": 0.1,\n \"n\": 10,\n \"p\": 5,\n \"wat\": 1}");
    std::string err;
    EXPECT_EQ(run_cli({"bounds", "--config", bad.string()}, nullptr, &err), 2);
    EXPECT_NE(err.find("bad.json:4:"), std::string::npos) << err;
}

TEST(Cli, BinaryExitCodes)
{
    const fs::path dir = temp_dir("bin");
    const fs::path bad = write_file(dir / "bad.json", replace(kBase, "[3.0, 4.0]", "[2.0]"));
    const std::string cli = LRB_CLI_PATH;
    auto status = [](const std::string& cmd) { return WEXITSTATUS(std::system((cmd + " >/dev/null 2>&1").c_str())); };
    EXPECT_EQ(status(cli + " run --config " + bad.string()), 2);
    EXPECT_EQ(status(cli + " verify --only factors"), 0);
    EXPECT_EQ(status(cli + " verify --only sign-alignment --inject-sign-fault"), 1);
}
