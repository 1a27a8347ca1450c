#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <lrb/config.hpp>
#include <lrb/experiments.hpp>
#include <lrb/report.hpp>
#include <lrb/verify.hpp>

namespace lrb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;

struct Options {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::optional<int> replications;
    std::string format;
    std::vector<std::string> only;
    bool inject_fault = false;
    std::vector<double> lambda_multiples{0.5, 1.0, 2.0, 4.0};
    std::vector<double> c_values;
    bool quiet = false;
};

/// Flag, then LRB_THREADS, then the config value, then the hardware.
inline int resolve_threads(int flag, int config_value)
{
    if (flag > 0) return flag;
    if (const char* env = std::getenv("LRB_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return v;
        } catch (const std::exception&) {
        }
    }
    if (config_value > 0) return config_value;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline RunConfig load_config(const std::string& path)
{
    try {
        return parse_config(read_file(path));
    } catch (const ConfigError& e) {
        std::string msg = path;
        if (e.line() > 0) msg += ":" + std::to_string(e.line());
        msg += ": ";
        if (!e.pointer().empty()) msg += e.pointer() + ": ";
        msg += e.what();
        throw ConfigError(e.pointer(), msg, e.line());
    }
}

inline std::filesystem::path prepare_out_dir(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("/output/dir", "output directory '" + dir + "' is not writable");
    return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("failed to write '" + path.string() + "'");
}

inline void apply_overrides(RunConfig& cfg, const Options& opt)
{
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (!opt.format.empty()) cfg.format = opt.format;
    for (auto& s : cfg.scenarios) {
        if (opt.seed) s.seed = *opt.seed;
        if (opt.replications) s.replications = *opt.replications;
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

inline int cmd_run(const Options& opt, std::ostream& out)
{
    RunConfig cfg = load_config(opt.config);
    apply_overrides(cfg, opt);
    for (std::size_t k = 0; k < cfg.scenarios.size(); ++k) {
        try {
            cfg.scenarios[k].validate();
        } catch (const ValidationError& e) {
            throw ConfigError("/scenarios/" + std::to_string(k) + e.pointer(), opt.config + ": override: " + e.what());
        }
    }
    const auto dir = prepare_out_dir(cfg.out_dir);
    RunOptions ropt;
    ropt.threads = resolve_threads(opt.threads, cfg.threads);

    nlohmann::json summary;
    summary["schema"] = "lrb-summary";
    summary["version"] = kConfigVersion;
    summary["scenarios"] = nlohmann::json::array();
    bool failed = false;
    for (const auto& s : cfg.scenarios) {
        const ScenarioResult res = run_scenario(s, ropt);
        const auto verdicts = compare_bounds(res.summary, s);
        failed = failed || any_failure(verdicts);
        if (!opt.quiet) print_verdict_table(out, s.id, verdicts);

        nlohmann::json entry;
        entry["scenario"] = to_json(s);
        entry["summary"] = to_json(res.summary);
        entry["verdicts"] = nlohmann::json::array();
        for (const auto& v : verdicts) entry["verdicts"].push_back(to_json(v));
        summary["scenarios"].push_back(std::move(entry));

        if (cfg.format == "json") {
            write_text(dir / ("reps_" + s.id + ".json"), reps_to_json(res).dump(1) + "\n");
        } else {
            std::ostringstream csv;
            write_rep_csv(csv, res, s.t0.size());
            write_text(dir / ("reps_" + s.id + ".csv"), csv.str());
        }
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    if (!opt.quiet) out << (failed ? "result: FAIL" : "result: ok") << "  (" << (dir / "summary.json").string() << ")\n";
    return failed ? kExitFail : kExitOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

inline int cmd_verify(const Options& opt, std::ostream& out)
{
    VerifyOptions vopt;
    vopt.threads = resolve_threads(opt.threads, 0);
    vopt.inject_sign_fault = opt.inject_fault;
    if (opt.seed) vopt.seed = *opt.seed;
    std::vector<SuiteResult> results;
    try {
        results = run_verify(opt.only, vopt);
    } catch (const DomainError& e) {
        throw ConfigError("--only", e.what());
    }
    bool ok = true;
    for (const auto& r : results) {
        out << std::left << std::setw(16) << r.name << std::setw(44) << r.property << std::right << std::setw(6) << r.checks
            << " checks  " << (r.passed() ? "PASS" : "FAIL");
        if (!r.passed()) out << "  " << r.failures << " failed: " << r.detail;
        out << '\n';
        ok = ok && r.passed();
    }
    return ok ? kExitOk : kExitFail;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepRow {
    std::string scenario_id;
    double multiple = 0.0;
    double lambda_l = 0.0;
    bool universal = false;
    double c = 0.0;
    MeanSe dmse;
    double p_nonempty = 0.0;
    std::string bound_kind;
    Verdict verdict;
    double threshold = 0.0;
};

/// Bound used at each grid point: cor35 when c > 2, thm314 (Gaussian noise)
/// otherwise.
inline std::vector<SweepRow> sweep_scenario(const Scenario& base, const std::vector<double>& multiples,
                                            const std::vector<double>& cs, const RunOptions& ropt)
{
    std::vector<SweepRow> rows;
    for (double m : multiples) {
        Scenario s = base;
        s.lambda = {LambdaRule::universal_multiple, m};
        s.c_values = cs;
        s.bounds.clear();
        s.validate();
        const ScenarioResult res = run_scenario(s, ropt);
        const auto& sum = res.summary;
        for (const auto& pc : sum.per_c) {
            SweepRow row;
            row.scenario_id = s.id;
            row.multiple = m;
            row.lambda_l = sum.lambda_l;
            row.universal = m == 1.0;
            row.c = pc.c;
            row.dmse = pc.dmse;
            row.p_nonempty = sum.p_nonempty.mean;
            row.threshold = sum.p_nonempty.mean > 0.0
                                ? cor35_positivity_threshold(sum.exp_max_full.mean, sum.p_nonempty.mean, pc.c)
                                : std::nan("");
            if (pc.c > 2.0) {
                row.bound_kind = "cor35";
                row.verdict = lower_bound_verdict("cor35", pc.c,
                                                  bound_cor35(sum.lambda_l, pc.c, sum.p_nonempty.mean, sum.exp_max_full.mean), pc.dmse);
            } else if (s.noise.kind == NoiseKind::gaussian) {
                row.bound_kind = "thm314";
                row.verdict = lower_bound_verdict(
                    "thm314", pc.c,
                    bound_thm314(sum.lambda_l, pc.c, sum.sigma, sum.n, sum.p_nonempty.mean, std::clamp(1.0 - sum.p_eq_s0.mean, 0.0, 1.0)),
                    pc.dmse);
            } else {
                row.bound_kind = "none";
                row.verdict.bound = std::nan("");
                row.verdict.status = Status::vacuous;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream os;
    os << "scenario_id,lambda_multiple,lambda_L,universal,c,dmse,se,p_nonempty,bound_kind,bound,positivity_threshold,verdict\n";
    for (const auto& r : rows)
        os << r.scenario_id << ',' << format_double(r.multiple) << ',' << format_double(r.lambda_l) << ','
           << (r.universal ? 1 : 0) << ',' << format_double(r.c) << ',' << format_double(r.dmse.mean) << ','
           << format_double(r.dmse.se) << ',' << format_double(r.p_nonempty) << ',' << r.bound_kind << ','
           << format_double(r.verdict.bound) << ',' << format_double(r.threshold) << ',' << to_string(r.verdict.status) << '\n';
    return os.str();
}

inline int cmd_sweep(const Options& opt, std::ostream& out)
{
    if (opt.lambda_multiples.empty())
        throw ConfigError("--lambda-multiples", "sweep grid must be non-empty");
    for (double m : opt.lambda_multiples)
        if (!(m > 0.0)) throw ConfigError("--lambda-multiples", "lambda multiples must be positive");
    for (double c : opt.c_values)
        if (!(c > 0.0)) throw ConfigError("--c-values", "c values must be positive");
    RunConfig cfg = load_config(opt.config);
    apply_overrides(cfg, opt);
    const auto dir = prepare_out_dir(cfg.out_dir);
    RunOptions ropt;
    ropt.threads = resolve_threads(opt.threads, cfg.threads);

    std::vector<SweepRow> rows;
    for (std::size_t k = 0; k < cfg.scenarios.size(); ++k) {
        const Scenario& s = cfg.scenarios[k];
        if (!(s.noise.sigma > 0.0))
            throw ConfigError("/scenarios/" + std::to_string(k) + "/noise/sigma", opt.config + ": sweep needs sigma > 0");
        const auto cs = opt.c_values.empty() ? s.c_values : opt.c_values;
        std::vector<SweepRow> part;
        try {
            part = sweep_scenario(s, opt.lambda_multiples, cs, ropt);
        } catch (const ValidationError& e) {
            throw ConfigError("/scenarios/" + std::to_string(k) + e.pointer(), opt.config + ": sweep grid: " + e.what());
        }
        rows.insert(rows.end(), part.begin(), part.end());
    }
    write_text(dir / "sweep.csv", sweep_csv(rows));
    bool failed = false;
    for (const auto& r : rows) {
        failed = failed || r.verdict.status == Status::fail;
        if (opt.quiet) continue;
        out << std::left << std::setw(24) << r.scenario_id << " x" << std::setw(5) << format_double(r.multiple)
            << (r.universal ? "* " : "  ") << "c=" << std::setw(6) << format_double(r.c) << std::right << std::scientific
            << std::setprecision(4) << " dmse=" << std::setw(11) << r.dmse.mean << " se=" << std::setw(10) << r.dmse.se
            << ' ' << std::setw(6) << r.bound_kind << '=' << std::setw(11) << r.verdict.bound << "  "
            << to_string(r.verdict.status) << std::defaultfloat << '\n';
    }
    if (!opt.quiet) out << "(* universal rate)  " << (dir / "sweep.csv").string() << '\n';
    return failed ? kExitFail : kExitOk;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

inline int cmd_bounds(const Options& opt, std::ostream& out)
{
    const std::string text = read_file(opt.config);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const int line = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ConfigError("", opt.config + ":" + std::to_string(line) + ": JSON syntax error: " + e.what(), line);
    }
    Index clusters = 0;
    double delta = 0.0;
    BoundInputs in;
    try {
        in = bound_inputs_from_json(j, clusters, delta);
    } catch (const ConfigError& e) {
        const int line = line_for_pointer(json_pointer_lines(text), e.pointer());
        throw ConfigError(e.pointer(), opt.config + ":" + std::to_string(line) + ": " +
                                           (e.pointer().empty() ? "" : e.pointer() + ": ") + e.what(), line);
    }
    BoundReport rep;
    try {
        rep = evaluate_bounds(in, clusters, delta);
    } catch (const DomainError& e) {
        throw ConfigError("", opt.config + ": " + e.what());
    }
    const std::string dumped = to_json(rep).dump(2) + "\n";
    out << dumped;
    if (!opt.out_dir.empty()) write_text(prepare_out_dir(opt.out_dir) / "bounds.json", dumped);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Lasso-Ridge refinement: Monte Carlo certification of prediction-risk dominance bounds", "lrb"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config, "JSON config file");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out-dir", opt.out_dir, "output directory");
        sub->add_option("--threads", opt.threads, "worker threads (fallback: LRB_THREADS)")->check(CLI::NonNegativeNumber);
        sub->add_flag("-q,--quiet", opt.quiet, "suppress the console table");
    };

    auto* run = app.add_subcommand("run", "run all scenarios of a config and certify the bounds");
    add_common(run, true);
    run->add_option("--seed", opt.seed, "master seed for every scenario");
    run->add_option("--format", opt.format, "per-replication output format")->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--replications", opt.replications, "override replications")->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "run the property suites");
    verify->add_option("--only", opt.only, "suites to run")->delimiter(',');
    verify->add_option("--seed", opt.seed, "suite seed");
    verify->add_option("--threads", opt.threads, "worker threads (fallback: LRB_THREADS)")->check(CLI::NonNegativeNumber);
    verify->add_flag("--inject-sign-fault", opt.inject_fault)->group("");

    auto* sweep = app.add_subcommand("sweep", "grid over lambda_L multiples of the universal rate and c");
    add_common(sweep, true);
    sweep->add_option("--seed", opt.seed, "master seed for every scenario");
    sweep->add_option("--replications", opt.replications, "override replications")->check(CLI::PositiveNumber);
    sweep->add_option("--lambda-multiples", opt.lambda_multiples, "multiples of sigma sqrt(2 log(2p)/n)")->delimiter(',');
    sweep->add_option("--c-values", opt.c_values, "ridge multipliers c")->delimiter(',');

    auto* bounds = app.add_subcommand("bounds", "evaluate every bound from a JSON of bound inputs");
    add_common(bounds, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*run) return cmd_run(opt, out);
        if (*verify) return cmd_verify(opt, out);
        if (*sweep) return cmd_sweep(opt, out);
        if (*bounds) return cmd_bounds(opt, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFail;
    }
    return kExitFail;
}

} // namespace lrb::cli
