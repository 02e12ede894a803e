#pragma once

// Flat key = value run configuration. Command-line flags are merged on top of
// the file, so the last word always belongs to the command line.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kwsolve/kwsolve.hpp"

namespace kwcli {

/// Fields that may come from an expression `<name>` or a file `<name>_file`.
inline const std::vector<std::string>& field_keys() {
    static const std::vector<std::string> keys = {"s", "s_hat", "s2", "u", "u_star", "f", "psi", "phi"};
    return keys;
}

inline const std::vector<std::string>& scalar_keys() {
    static const std::vector<std::string> keys = {
        "rank", "dims", "n", "t", "alpha", "alpha_file", "c", "alpha_const", "c_list", "steps",
        "search_floor", "p", "samples", "seed", "strategy", "refine", "lin_tol", "lin_maxiter",
        "lin_restart", "kw_tol", "kw_maxiter", "kw_lambda_override", "kw_adaptive_lambda",
        "gauduchon_tol", "heatmap", "out"};
    return keys;
}

inline std::vector<std::string> all_keys() {
    std::vector<std::string> keys = scalar_keys();
    for (const auto& f : field_keys()) {
        keys.push_back(f);
        keys.push_back(f + "_file");
    }
    return keys;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

class RunConfig {
public:
    /// Parses `key = value` lines; `#` starts a comment.
    void load_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw kw::PreconditionError("cannot open config file " + path.string());
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw kw::PreconditionError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
            }
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), path.string() + ":" + std::to_string(lineno));
        }
        base_dir_ = path.parent_path();
    }

    void set(const std::string& key, const std::string& value, const std::string& where = "command line") {
        static const std::set<std::string> known = [] {
            const auto k = all_keys();
            return std::set<std::string>(k.begin(), k.end());
        }();
        if (!known.count(key)) throw kw::PreconditionError(where + ": unknown key '" + key + "'");
        values_[key] = value;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::optional<std::string> get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::string require(const std::string& key) const {
        if (auto v = get(key)) return *v;
        throw kw::PreconditionError("missing required key '" + key + "'");
    }

    double number(const std::string& key) const { return to_double(key, require(key)); }
    double number(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    long integer(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const std::string v = require(key);
        std::size_t pos = 0;
        long out = 0;
        try {
            out = std::stol(v, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != v.size()) throw kw::PreconditionError("key '" + key + "' needs an integer, got '" + v + "'");
        return out;
    }

    bool flag(const std::string& key, bool fallback = false) const {
        if (!has(key)) return fallback;
        const std::string v = require(key);
        if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
        if (v == "0" || v == "false" || v == "no" || v == "off") return false;
        throw kw::PreconditionError("key '" + key + "' needs a boolean, got '" + v + "'");
    }

    std::vector<double> number_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : split(require(key), ',')) {
            if (item.empty()) throw kw::PreconditionError("key '" + key + "' has an empty list entry");
            out.push_back(to_double(key, item));
        }
        return out;
    }

    std::filesystem::path resolve(const std::string& p) const {
        std::filesystem::path path(p);
        if (path.is_relative() && !base_dir_.empty()) return base_dir_ / path;
        return path;
    }

    /// Grid from `dims` (with optional `rank` broadcasting a single extent),
    /// or from the first field file when no grid keys are given.
    kw::GridSpec grid() const {
        if (grid_) return *grid_;
        if (has("dims")) {
            std::vector<std::size_t> dims;
            for (const auto& item : split(require("dims"), ',')) dims.push_back(to_extent(item));
            if (has("rank")) {
                const long rank = integer("rank", 0);
                if (dims.size() == 1 && rank >= 1) dims.assign(static_cast<std::size_t>(rank), dims.front());
                if (static_cast<long>(dims.size()) != rank) {
                    throw kw::PreconditionError("rank " + std::to_string(rank) + " does not match dims '" +
                                                require("dims") + "'");
                }
            }
            grid_ = kw::GridSpec(dims);
        } else {
            for (const auto& name : field_keys()) {
                if (auto file = get(name + "_file")) {
                    grid_ = kw::io::load_field(resolve(*file)).spec();
                    break;
                }
            }
            if (!grid_) throw kw::PreconditionError("no grid: set dims (and optionally rank) or give a field file");
        }
        return *grid_;
    }

    bool has_field(const std::string& name) const { return has(name) || has(name + "_file"); }

    /// Exactly one of `<name>` and `<name>_file` must be present.
    kw::ScalarField field(const std::string& name) const {
        const bool expr = has(name), file = has(name + "_file");
        if (expr && file) {
            throw kw::PreconditionError("field '" + name + "' has both an expression and a file; give exactly one");
        }
        if (!expr && !file) throw kw::PreconditionError("missing field '" + name + "' (set " + name + " or " + name + "_file)");
        const kw::GridSpec spec = grid();
        if (expr) {
            try {
                return kw::expr::evaluate(require(name), spec);
            } catch (const kw::ParseError& e) {
                throw kw::ParseError("in " + name + ": " + strip_offset(e.what()), e.offset());
            } catch (const kw::EvalError& e) {
                throw kw::EvalError("in " + name + ": " + strip_offset(e.what()), e.offset());
            }
        }
        kw::ScalarField f = kw::io::load_field(resolve(require(name + "_file")));
        if (!(f.spec() == spec)) {
            throw kw::PreconditionError("field '" + name + "' is on a " + f.spec().describe() + " grid, expected " +
                                        spec.describe());
        }
        return f;
    }

    kw::ScalarField field_or(const std::string& name, double fallback) const {
        return has_field(name) ? field(name) : kw::ScalarField(grid(), fallback);
    }

    /// Lee form: `alpha` holds ';'-separated component expressions, `alpha_file`
    /// ';'-separated field files. Missing trailing components are zero.
    kw::OneForm alpha() const {
        const kw::GridSpec spec = grid();
        if (has("alpha") && has("alpha_file")) {
            throw kw::PreconditionError("alpha has both expressions and files; give exactly one");
        }
        std::vector<kw::ScalarField> comps;
        if (has("alpha")) {
            const auto parts = split(require("alpha"), ';');
            if (parts.size() > spec.rank()) throw kw::PreconditionError("alpha has more components than the grid rank");
            for (std::size_t a = 0; a < parts.size(); ++a) {
                try {
                    comps.push_back(kw::expr::evaluate(parts[a], spec));
                } catch (const kw::ParseError& e) {
                    throw kw::ParseError("in alpha component " + std::to_string(a) + ": " + strip_offset(e.what()), e.offset());
                } catch (const kw::EvalError& e) {
                    throw kw::EvalError("in alpha component " + std::to_string(a) + ": " + strip_offset(e.what()), e.offset());
                }
            }
        } else if (has("alpha_file")) {
            const auto parts = split(require("alpha_file"), ';');
            if (parts.size() > spec.rank()) throw kw::PreconditionError("alpha_file has more components than the grid rank");
            for (const auto& p : parts) {
                kw::ScalarField f = kw::io::load_field(resolve(p));
                kw::require_same_spec(spec, f.spec(), "alpha_file");
                comps.push_back(std::move(f));
            }
        }
        while (comps.size() < spec.rank()) comps.emplace_back(spec, 0.0);
        return kw::OneForm(std::move(comps));
    }

    kw::lin::LinearOptions linear_options() const {
        kw::lin::LinearOptions o;
        o.tol = number("lin_tol", o.tol);
        o.max_iter = static_cast<int>(integer("lin_maxiter", o.max_iter));
        o.restart = static_cast<int>(integer("lin_restart", o.restart));
        if (!(o.tol > 0.0) || o.max_iter < 1 || o.restart < 1) {
            throw kw::PreconditionError("lin_tol, lin_maxiter and lin_restart must be positive");
        }
        return o;
    }

    kw::solver::KWOptions kw_options() const {
        kw::solver::KWOptions o;
        o.lin = linear_options();
        o.tol = number("kw_tol", o.tol);
        if (has("kw_maxiter")) {
            const int cap = static_cast<int>(integer("kw_maxiter", 0));
            if (cap < 1) throw kw::PreconditionError("kw_maxiter must be positive");
            o.monotone_max_iter = o.newton_max_iter = o.fixed_point_max_iter = cap;
        }
        if (has("kw_lambda_override")) o.lambda_override = number("kw_lambda_override");
        o.adaptive_lambda = flag("kw_adaptive_lambda", true);
        if (!(o.tol > 0.0)) throw kw::PreconditionError("kw_tol must be positive");
        return o;
    }

    double gauduchon_tol() const { return number("gauduchon_tol", kw::geo::default_gauduchon_tol); }

    kw::geo::GeometrySetup setup() const {
        return kw::geo::GeometrySetup(static_cast<int>(integer("n", 1)), number("t", 1.0));
    }

private:
    static double to_double(const std::string& key, const std::string& v) {
        std::size_t pos = 0;
        double out = 0.0;
        try {
            out = std::stod(v, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != v.size() || !std::isfinite(out)) {
            throw kw::PreconditionError("key '" + key + "' needs a finite number, got '" + v + "'");
        }
        return out;
    }

    static std::size_t to_extent(const std::string& v) {
        std::size_t pos = 0;
        long out = 0;
        try {
            out = std::stol(v, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != v.size() || out <= 0) throw kw::PreconditionError("bad grid extent '" + v + "' in dims");
        return static_cast<std::size_t>(out);
    }

    /// Messages from ParseError/EvalError already end in "at offset N"; drop
    /// it before re-wrapping so it is not repeated.
    static std::string strip_offset(const std::string& what) {
        const auto pos = what.rfind(" at offset ");
        return pos == std::string::npos ? what : what.substr(0, pos);
    }

    std::map<std::string, std::string> values_;
    std::filesystem::path base_dir_;
    mutable std::optional<kw::GridSpec> grid_;
};

} // namespace kwcli
