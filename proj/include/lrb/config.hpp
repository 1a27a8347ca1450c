#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <lrb/experiments.hpp>

namespace lrb {

inline constexpr int kConfigVersion = 1;

/// Batch configuration: a list of scenarios plus run settings.
struct RunConfig {
    int version = kConfigVersion;
    std::vector<Scenario> scenarios;
    std::string out_dir = "lrb_out";
    std::string format = "csv";
    int threads = 0;  // 0: decided by the caller (flag, env, hardware)
    std::string verbosity = "normal";

    bool operator==(const RunConfig&) const = default;
};

/// Config-level failure carrying a JSON pointer into the document.
class ConfigError : public DomainError {
public:
    ConfigError(std::string pointer, const std::string& what, int line = 0)
        : DomainError(what), pointer_(std::move(pointer)), line_(line) {}
    const std::string& pointer() const { return pointer_; }
    int line() const { return line_; }
    void set_line(int line) { line_ = line; }

private:
    std::string pointer_;
    int line_;
};

// ---------------------------------------------------------------------------
// JSON pointer -> source line, for line-anchored messages. Input must be
// valid JSON (it is only consulted after a successful parse).
// ---------------------------------------------------------------------------

namespace detail {

class PointerLineScanner {
public:
    explicit PointerLineScanner(std::string_view text) : text_(text) {}

    std::map<std::string, int> run()
    {
        value("");
        return std::move(lines_);
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') ++line_;
            ++pos_;
        }
    }

    std::string string_token()
    {
        std::string out;
        ++pos_;  // opening quote
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                out += text_[pos_ + 1];
                pos_ += 2;
                continue;
            }
            out += text_[pos_++];
        }
        ++pos_;  // closing quote
        return out;
    }

    static std::string escape(const std::string& key)
    {
        std::string out;
        for (char ch : key) {
            if (ch == '~') out += "~0";
            else if (ch == '/') out += "~1";
            else out += ch;
        }
        return out;
    }

    void value(const std::string& path)
    {
        skip_ws();
        if (pos_ >= text_.size()) return;
        lines_.emplace(path, line_);
        const char ch = text_[pos_];
        if (ch == '{') {
            ++pos_;
            for (;;) {
                skip_ws();
                if (pos_ >= text_.size() || text_[pos_] == '}') break;
                if (text_[pos_] == ',') {
                    ++pos_;
                    continue;
                }
                const int key_line = line_;
                const std::string key = string_token();
                skip_ws();
                ++pos_;  // ':'
                const std::string child = path + "/" + escape(key);
                lines_.emplace(child, key_line);
                value(child);
            }
            ++pos_;
        } else if (ch == '[') {
            ++pos_;
            int idx = 0;
            for (;;) {
                skip_ws();
                if (pos_ >= text_.size() || text_[pos_] == ']') break;
                if (text_[pos_] == ',') {
                    ++pos_;
                    continue;
                }
                value(path + "/" + std::to_string(idx++));
            }
            ++pos_;
        } else if (ch == '"') {
            string_token();
        } else {
            while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
                   !std::isspace(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::map<std::string, int> lines_;
};

} // namespace detail

inline std::map<std::string, int> json_pointer_lines(std::string_view text)
{
    return detail::PointerLineScanner(text).run();
}

/// Line of the deepest existing prefix of `pointer`.
inline int line_for_pointer(const std::map<std::string, int>& lines, std::string pointer)
{
    for (;;) {
        if (auto it = lines.find(pointer); it != lines.end()) return it->second;
        const auto slash = pointer.rfind('/');
        if (slash == std::string::npos || pointer.empty()) return 1;
        pointer.resize(slash);
    }
}

inline int line_of_offset(std::string_view text, std::size_t offset)
{
    int line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

// ---------------------------------------------------------------------------
// Scenario <-> JSON
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    void allow(std::initializer_list<std::string_view> keys) const
    {
        for (const auto& [key, _] : j_.items()) {
            bool known = false;
            for (auto k : keys) known = known || key == k;
            if (!known) throw ConfigError(path_ + "/" + key, "unknown field '" + key + "'");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    std::string at(const char* key) const { return path_ + "/" + key; }

    const json& require(const char* key) const
    {
        if (!j_.contains(key)) throw ConfigError(at(key), std::string("missing required field '") + key + "'");
        return j_.at(key);
    }

    double number(const char* key, std::optional<double> fallback = std::nullopt) const
    {
        if (!j_.contains(key)) {
            if (fallback) return *fallback;
            require(key);
        }
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(at(key), std::string("field '") + key + "' must be a number");
        return v.get<double>();
    }

    std::int64_t integer(const char* key, std::optional<std::int64_t> fallback = std::nullopt) const
    {
        if (!j_.contains(key)) {
            if (fallback) return *fallback;
            require(key);
        }
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), std::string("field '") + key + "' must be an integer");
        return v.get<std::int64_t>();
    }

    std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) const
    {
        if (!j_.contains(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw ConfigError(at(key), std::string("field '") + key + "' must be a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::string string(const char* key, std::optional<std::string> fallback = std::nullopt) const
    {
        if (!j_.contains(key)) {
            if (fallback) return *fallback;
            require(key);
        }
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(at(key), std::string("field '") + key + "' must be a string");
        return v.get<std::string>();
    }

    bool boolean(const char* key, bool fallback) const
    {
        if (!j_.contains(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(at(key), std::string("field '") + key + "' must be a boolean");
        return v.get<bool>();
    }

private:
    const json& j_;
    std::string path_;
};

template <class F>
auto enum_field(const Reader& r, const char* key, const std::string& fallback, F&& convert)
{
    const std::string text = r.string(key, fallback);
    try {
        return convert(text);
    } catch (const DomainError& e) {
        throw ConfigError(r.at(key), e.what());
    }
}

inline LambdaRule lambda_rule_from_string(std::string_view s)
{
    if (s == "absolute") return LambdaRule::absolute;
    if (s == "universal_multiple") return LambdaRule::universal_multiple;
    throw DomainError("unknown lambda rule '" + std::string(s) + "'");
}

inline T0Kind t0_kind_from_string(std::string_view s)
{
    if (s == "support") return T0Kind::support;
    if (s == "full") return T0Kind::full;
    if (s == "padded") return T0Kind::padded;
    if (s == "explicit") return T0Kind::explicit_set;
    throw DomainError("unknown T0 kind '" + std::string(s) + "'");
}

inline std::string to_string(T0Kind k)
{
    switch (k) {
    case T0Kind::support: return "support";
    case T0Kind::full: return "full";
    case T0Kind::padded: return "padded";
    case T0Kind::explicit_set: return "explicit";
    }
    return "unknown";
}

inline BoundKind bound_kind_from_string(std::string_view s)
{
    if (s == "cor35") return BoundKind::cor35;
    if (s == "thm31") return BoundKind::thm31;
    if (s == "thm314") return BoundKind::thm314;
    throw DomainError("unknown bound '" + std::string(s) + "'");
}

} // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j, const std::string& path)
{
    using detail::Reader;
    Scenario s;
    Reader root(j, path);
    root.allow({"id", "design", "model", "noise", "lambda", "c_values", "replications", "seed", "t0", "bounds"});
    s.id = root.string("id");

    Reader d(root.require("design"), root.at("design"));
    d.allow({"n", "p", "kind", "rho", "clusters", "delta", "rank", "mode"});
    s.n = d.integer("n");
    s.p = d.integer("p");
    s.design.kind = detail::enum_field(d, "kind", "iid_gaussian", design_kind_from_string);
    s.design.rho = d.number("rho", 0.0);
    s.design.clusters = static_cast<int>(d.integer("clusters", 0));
    s.design.delta = d.number("delta", 0.2);
    s.design.rank = static_cast<int>(d.integer("rank", 3));
    s.design_mode = detail::enum_field(d, "mode", "fixed", [](std::string_view m) {
        if (m == "fixed") return DesignMode::fixed;
        if (m == "redrawn") return DesignMode::redrawn;
        throw DomainError("design mode must be 'fixed' or 'redrawn'");
    });

    if (root.has("model")) {
        Reader m(j.at("model"), root.at("model"));
        m.allow({"support_size", "magnitude", "placement", "alternate_signs"});
        s.model.support_size = m.integer("support_size", 0);
        s.model.magnitude = m.number("magnitude", 0.0);
        s.model.placement = detail::enum_field(m, "placement", "first", [](std::string_view v) {
            if (v == "first") return SupportPlacement::first;
            if (v == "random") return SupportPlacement::random;
            throw DomainError("placement must be 'first' or 'random'");
        });
        s.model.alternate_signs = m.boolean("alternate_signs", true);
    }

    Reader nz(root.require("noise"), root.at("noise"));
    nz.allow({"kind", "sigma", "a", "b"});
    s.noise.kind = detail::enum_field(nz, "kind", "gaussian", noise_kind_from_string);
    s.noise.sigma = nz.number("sigma");
    s.noise.a = nz.number("a", 1.0);
    s.noise.b = nz.number("b", 0.0);

    Reader lam(root.require("lambda"), root.at("lambda"));
    lam.allow({"rule", "value"});
    s.lambda.rule = detail::enum_field(lam, "rule", "universal_multiple", detail::lambda_rule_from_string);
    s.lambda.value = lam.number("value");

    const auto& cv = root.require("c_values");
    if (!cv.is_array()) throw ConfigError(root.at("c_values"), "c_values must be an array");
    s.c_values.clear();
    for (std::size_t k = 0; k < cv.size(); ++k) {
        if (!cv[k].is_number()) throw ConfigError(root.at("c_values") + "/" + std::to_string(k), "c must be a number");
        s.c_values.push_back(cv[k].get<double>());
    }
    s.replications = static_cast<int>(root.integer("replications"));
    s.seed = root.unsigned_integer("seed", 0);

    s.t0.clear();
    if (root.has("t0")) {
        const auto& arr = j.at("t0");
        if (!arr.is_array()) throw ConfigError(root.at("t0"), "t0 must be an array");
        for (std::size_t k = 0; k < arr.size(); ++k) {
            Reader t(arr[k], root.at("t0") + "/" + std::to_string(k));
            t.allow({"name", "kind", "pad", "indices"});
            T0Spec spec;
            spec.kind = detail::enum_field(t, "kind", "support", detail::t0_kind_from_string);
            spec.name = t.string("name", detail::to_string(spec.kind));
            spec.pad = static_cast<int>(t.integer("pad", 0));
            if (t.has("indices")) {
                const auto& idx = arr[k].at("indices");
                if (!idx.is_array()) throw ConfigError(t.at("indices"), "indices must be an array");
                for (const auto& v : idx) {
                    if (!v.is_number_integer()) throw ConfigError(t.at("indices"), "indices must be integers");
                    spec.indices.push_back(v.get<Index>());
                }
                std::sort(spec.indices.begin(), spec.indices.end());
                spec.indices.erase(std::unique(spec.indices.begin(), spec.indices.end()), spec.indices.end());
            }
            s.t0.push_back(std::move(spec));
        }
    }

    if (root.has("bounds")) {
        const auto& arr = j.at("bounds");
        if (!arr.is_array()) throw ConfigError(root.at("bounds"), "bounds must be an array");
        s.bounds.clear();
        for (std::size_t k = 0; k < arr.size(); ++k) {
            const std::string ptr = root.at("bounds") + "/" + std::to_string(k);
            if (!arr[k].is_string()) throw ConfigError(ptr, "bound names must be strings");
            try {
                s.bounds.push_back(detail::bound_kind_from_string(arr[k].get<std::string>()));
            } catch (const DomainError& e) {
                throw ConfigError(ptr, e.what());
            }
        }
    }

    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(path + e.pointer(), e.what());
    }
    return s;
}

inline nlohmann::json to_json(const Scenario& s)
{
    nlohmann::json j;
    j["id"] = s.id;
    j["design"] = {{"n", s.n},
                   {"p", s.p},
                   {"kind", to_string(s.design.kind)},
                   {"rho", s.design.rho},
                   {"clusters", s.design.clusters},
                   {"delta", s.design.delta},
                   {"rank", s.design.rank},
                   {"mode", s.design_mode == DesignMode::fixed ? "fixed" : "redrawn"}};
    j["model"] = {{"support_size", s.model.support_size},
                  {"magnitude", s.model.magnitude},
                  {"placement", s.model.placement == SupportPlacement::first ? "first" : "random"},
                  {"alternate_signs", s.model.alternate_signs}};
    j["noise"] = {{"kind", to_string(s.noise.kind)}, {"sigma", s.noise.sigma}, {"a", s.noise.a}, {"b", s.noise.b}};
    j["lambda"] = {{"rule", s.lambda.rule == LambdaRule::absolute ? "absolute" : "universal_multiple"},
                   {"value", s.lambda.value}};
    j["c_values"] = s.c_values;
    j["replications"] = s.replications;
    j["seed"] = s.seed;
    j["t0"] = nlohmann::json::array();
    for (const auto& t : s.t0) {
        nlohmann::json tj = {{"name", t.name}, {"kind", detail::to_string(t.kind)}, {"pad", t.pad}};
        if (t.kind == T0Kind::explicit_set || !t.indices.empty()) tj["indices"] = t.indices;
        j["t0"].push_back(tj);
    }
    j["bounds"] = nlohmann::json::array();
    for (auto b : s.bounds) j["bounds"].push_back(to_string(b));
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j)
{
    using detail::Reader;
    Reader root(j, "");
    root.allow({"schema", "version", "scenarios", "output", "threads", "verbosity"});
    RunConfig cfg;
    if (root.has("schema") && root.string("schema") != "lrb-config")
        throw ConfigError("/schema", "schema must be 'lrb-config'");
    cfg.version = static_cast<int>(root.integer("version"));
    if (cfg.version != kConfigVersion)
        throw ConfigError("/version", "unsupported config version " + std::to_string(cfg.version));
    if (root.has("output")) {
        Reader out(j.at("output"), "/output");
        out.allow({"dir", "format"});
        cfg.out_dir = out.string("dir", cfg.out_dir);
        cfg.format = out.string("format", cfg.format);
        if (cfg.format != "csv" && cfg.format != "json") throw ConfigError("/output/format", "format must be csv or json");
    }
    cfg.threads = static_cast<int>(root.integer("threads", 0));
    if (cfg.threads < 0) throw ConfigError("/threads", "threads must be nonnegative");
    cfg.verbosity = root.string("verbosity", cfg.verbosity);

    const auto& arr = root.require("scenarios");
    if (!arr.is_array() || arr.empty()) throw ConfigError("/scenarios", "scenarios must be a non-empty array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const std::string path = "/scenarios/" + std::to_string(k);
        cfg.scenarios.push_back(scenario_from_json(arr[k], path));
        for (std::size_t m = 0; m < k; ++m)
            if (cfg.scenarios[m].id == cfg.scenarios[k].id)
                throw ConfigError(path + "/id", "duplicate scenario id '" + cfg.scenarios[k].id + "'");
    }
    return cfg;
}

inline nlohmann::json to_json(const RunConfig& cfg)
{
    nlohmann::json j;
    j["schema"] = "lrb-config";
    j["version"] = cfg.version;
    j["output"] = {{"dir", cfg.out_dir}, {"format", cfg.format}};
    j["threads"] = cfg.threads;
    j["verbosity"] = cfg.verbosity;
    j["scenarios"] = nlohmann::json::array();
    for (const auto& s : cfg.scenarios) j["scenarios"].push_back(to_json(s));
    return j;
}

/// Parses config text; every error comes back as ConfigError with a line.
inline RunConfig parse_config(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        throw ConfigError("", std::string("JSON syntax error: ") + e.what(), line_of_offset(text, offset));
    }
    try {
        return config_from_json(j);
    } catch (ConfigError& e) {
        e.set_line(line_for_pointer(json_pointer_lines(text), e.pointer()));
        throw;
    }
}

} // namespace lrb
