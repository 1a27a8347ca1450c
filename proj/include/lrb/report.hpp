#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <lrb/config.hpp>
#include <lrb/experiments.hpp>
#include <lrb/format.hpp>

namespace lrb {

// Non-finite doubles go out as null; JSON has no NaN.
inline nlohmann::json json_number(double v)
{
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline nlohmann::json to_json(const MeanSe& m)
{
    return {{"mean", json_number(m.mean)}, {"se", json_number(m.se)}, {"count", m.count}};
}

inline nlohmann::json to_json(const DmseSummary& s)
{
    nlohmann::json j;
    j["scenario_id"] = s.scenario_id;
    j["n"] = s.n;
    j["p"] = s.p;
    j["sigma"] = s.sigma;
    j["lambda_L"] = s.lambda_l;
    j["replications"] = s.replications;
    j["certified"] = s.certified;
    j["excluded"] = s.excluded;
    if (s.realized_clusters > 0) {
        j["clusters"] = s.realized_clusters;
        j["cluster_radius"] = s.cluster_radius;
    }
    j["sigma_beta0_inf"] = s.sigma_beta0_inf;
    j["empty_bound"] = json_number(s.empty_bound);
    j["p_nonempty"] = to_json(s.p_nonempty);
    j["p_empty"] = to_json(s.p_empty);
    j["p_eq_S0"] = to_json(s.p_eq_s0);
    j["t0"] = nlohmann::json::array();
    for (std::size_t k = 0; k < s.t0_names.size(); ++k)
        j["t0"].push_back({{"name", s.t0_names[k]},
                           {"size", s.t0_sizes[k]},
                           {"p_contain", to_json(s.p_contain[k])},
                           {"exp_max", to_json(s.exp_max_t[k])}});
    j["exp_max_full"] = to_json(s.exp_max_full);
    j["second_moment"] = to_json(s.second_moment);
    j["sqrt_second_moment"] = s.sqrt_second_moment;
    j["per_c"] = nlohmann::json::array();
    for (const auto& pc : s.per_c)
        j["per_c"].push_back({{"c", pc.c},
                              {"dmse", to_json(pc.dmse)},
                              {"ci95", {pc.ci95_lo, pc.ci95_hi}},
                              {"H", to_json(pc.h)},
                              {"mean_l1_delta", pc.mean_l1_delta},
                              {"max_identity_residual", pc.max_identity_residual},
                              {"sign_misaligned", pc.sign_misaligned}});
    return j;
}

inline nlohmann::json to_json(const Verdict& v)
{
    nlohmann::json j = {{"check", v.check},
                        {"bound", json_number(v.bound)},
                        {"estimate", json_number(v.estimate)},
                        {"se", json_number(v.se)},
                        {"margin", json_number(v.margin)},
                        {"status", to_string(v.status)}};
    if (std::isfinite(v.c)) j["c"] = v.c;
    if (!v.t0.empty()) j["t0"] = v.t0;
    return j;
}

inline nlohmann::json to_json(const BoundReport& r)
{
    return {{"thm31", json_number(r.thm31_bound)},
            {"cor35", json_number(r.cor35_bound)},
            {"thm314", json_number(r.thm314_bound)},
            {"thm31_applicable", r.thm31_applicable},
            {"f1", r.f1},
            {"f2", r.f2},
            {"f3_max", r.f3_max},
            {"f4", r.f4},
            {"leading_factor", r.leading_factor},
            {"gaussian_max_bound", json_number(r.gaussian_max_bound)},
            {"second_moment_bound", json_number(r.second_moment_bound)},
            {"two_step_bound", json_number(r.two_step_bound)},
            {"positivity_threshold", json_number(r.positivity_threshold)}};
}

/// BoundInputs from JSON; keys mirror the struct. Extra keys "clusters" and
/// "delta" are returned through the out-parameters for the two-step bound.
inline BoundInputs bound_inputs_from_json(const nlohmann::json& j, Index& clusters, double& delta)
{
    detail::Reader r(j, "");
    r.allow({"lambda_L", "c", "n", "p", "sigma", "p_nonempty", "t0", "exp_max_t0", "exp_max_full",
             "sqrt_second_moment", "p_not_contained", "p_neq_S0", "clusters", "delta"});
    BoundInputs in;
    in.lambda_l = r.number("lambda_L");
    in.c = r.number("c", 3.0);
    in.n = r.integer("n");
    in.p = r.integer("p");
    in.sigma = r.number("sigma", 0.0);
    in.p_nonempty = r.number("p_nonempty", 1.0);
    if (r.has("t0")) {
        const auto& arr = j.at("t0");
        if (!arr.is_array()) throw ConfigError("/t0", "t0 must be an array of indices");
        for (const auto& v : arr) {
            if (!v.is_number_integer()) throw ConfigError("/t0", "t0 must be an array of indices");
            in.t0.push_back(v.get<Index>());
        }
    }
    in.exp_max_t0 = r.number("exp_max_t0", 0.0);
    in.exp_max_full = r.number("exp_max_full", 0.0);
    in.sqrt_second_moment = r.number("sqrt_second_moment", 0.0);
    in.p_not_contained = r.number("p_not_contained", 0.0);
    in.p_neq_s0 = r.number("p_neq_S0", 0.0);
    clusters = r.integer("clusters", 0);
    delta = r.number("delta", 0.0);
    try {
        in.validate();
    } catch (const DomainError& e) {
        throw ConfigError("", e.what());
    }
    return in;
}

// ---------------------------------------------------------------------------
// Per-replication records
// ---------------------------------------------------------------------------

inline std::string rep_csv_header(std::size_t t0_count)
{
    std::string h = "scenario_id,rep,c,lambda_L,E_size,H,delta_gap,pred_err_lasso,pred_err_refined,E_empty,E_eq_S0";
    for (std::size_t k = 0; k < t0_count; ++k) h += ",E_in_T0_" + std::to_string(k);
    return h;
}

/// One row per (certified replication, c). Doubles use shortest round-trip
/// formatting so the file parses back exactly.
inline void write_rep_csv(std::ostream& os, const ScenarioResult& res, std::size_t t0_count, bool header = true)
{
    if (header) os << rep_csv_header(t0_count) << '\n';
    const auto& sum = res.summary;
    for (const auto& rec : res.reps) {
        if (!rec.certified) continue;
        for (const auto& rr : rec.per_c) {
            os << sum.scenario_id << ',' << rec.rep << ',' << format_double(rr.c) << ',' << format_double(sum.lambda_l)
               << ',' << rec.e_size << ',' << format_double(rr.h) << ',' << format_double(rr.delta_gap) << ','
               << format_double(rr.pred_err_lasso) << ',' << format_double(rr.pred_err_refined) << ','
               << (rec.e_empty ? 1 : 0) << ',' << (rec.e_eq_s0 ? 1 : 0);
            for (std::size_t k = 0; k < t0_count; ++k) os << ',' << static_cast<int>(rec.e_in_t0[k]);
            os << '\n';
        }
    }
}

inline nlohmann::json reps_to_json(const ScenarioResult& res)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rec : res.reps) {
        nlohmann::json j = {{"rep", rec.rep},
                            {"certified", rec.certified},
                            {"E_size", rec.e_size},
                            {"E_empty", rec.e_empty},
                            {"E_eq_S0", rec.e_eq_s0},
                            {"kkt_residual", rec.kkt_residual},
                            {"duality_gap", rec.duality_gap},
                            {"max_full", rec.max_full}};
        j["E_in_T0"] = nlohmann::json::array();
        for (char b : rec.e_in_t0) j["E_in_T0"].push_back(b != 0);
        j["per_c"] = nlohmann::json::array();
        for (const auto& rr : rec.per_c)
            j["per_c"].push_back({{"c", rr.c},
                                  {"lambda_R", rr.lambda_r},
                                  {"H", rr.h},
                                  {"delta_gap", rr.delta_gap},
                                  {"pred_err_lasso", rr.pred_err_lasso},
                                  {"pred_err_refined", rr.pred_err_refined},
                                  {"l1_delta", rr.l1_delta},
                                  {"identity_residual", rr.identity_residual},
                                  {"signs_aligned", rr.signs_aligned}});
        arr.push_back(std::move(j));
    }
    return arr;
}

/// Sparse (index, value) pairs plus certificate fields.
inline nlohmann::json to_json(const LassoSolution& sol)
{
    nlohmann::json beta = nlohmann::json::array();
    for (Index j = 0; j < sol.beta.size(); ++j)
        if (sol.beta(j) != 0.0) beta.push_back({j, sol.beta(j)});
    return {{"lambda", sol.lambda},
            {"beta", beta},
            {"E", sol.equi_set},
            {"signs", sol.signs},
            {"kkt_residual", sol.kkt_residual},
            {"duality_gap", sol.duality_gap},
            {"primal", sol.primal},
            {"iterations", sol.iterations},
            {"certified", sol.certified}};
}

// ---------------------------------------------------------------------------
// Console table
// ---------------------------------------------------------------------------

inline void print_verdict_table(std::ostream& os, const std::string& scenario_id, const std::vector<Verdict>& vs)
{
    std::ostringstream line;
    for (const auto& v : vs) {
        line.str("");
        line << std::left << std::setw(24) << scenario_id << ' ' << std::setw(9) << v.check << ' ';
        if (std::isfinite(v.c)) line << "c=" << std::setw(6) << format_double(v.c);
        else line << std::setw(8) << "";
        line << std::right << std::scientific << std::setprecision(4) << " bound=" << std::setw(11) << v.bound
             << " est=" << std::setw(11) << v.estimate << " se=" << std::setw(10) << v.se << "  "
             << to_string(v.status);
        if (!v.t0.empty()) line << "  (T0=" << v.t0 << ")";
        os << line.str() << '\n';
    }
}

} // namespace lrb
