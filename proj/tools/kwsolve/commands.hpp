#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "config.hpp"
#include "output.hpp"

namespace kwcli {

enum ExitCode : int { ok = 0, precondition = 2, solver_failure = 3, unsolvable = 4 };

inline int exit_for(kw::solver::Status s) {
    switch (s) {
    case kw::solver::Status::converged: return ok;
    case kw::solver::Status::certified_unsolvable: return unsolvable;
    default: return solver_failure;
    }
}

inline void put_report(Output& out, const kw::solver::SolveReport& rep) {
    out.put("status", kw::solver::to_string(rep.status));
    out.put("method", kw::solver::to_string(rep.method));
    out.put("iterations", rep.iterations);
    out.put("kw_residual", rep.residual);
    if (rep.method == kw::solver::Method::monotone) out.put("lambda", rep.lambda);
    if (rep.method == kw::solver::Method::continuation) out.put("tau_reached", rep.tau_reached);
    if (!rep.message.empty()) out.put("message", rep.message);
}

inline void put_setup(Output& out, const kw::geo::GeometrySetup& setup) {
    out.put("n", setup.n());
    out.put("t", setup.t());
    out.put("k", setup.k());
    out.put("degenerate", setup.degenerate());
}

inline kw::solver::KWProblem kw_problem(const RunConfig& cfg) {
    kw::OneForm alpha = cfg.alpha();
    kw::geo::require_gauduchon(alpha, cfg.gauduchon_tol());
    return kw::solver::KWProblem(std::move(alpha), cfg.number("c"), cfg.field("phi"));
}

// ---------------------------------------------------------------------------

inline int cmd_validate(const RunConfig& cfg, Output& out) {
    const kw::GridSpec spec = cfg.grid();
    out.put("grid", spec.describe());
    out.put("rank", spec.rank());
    out.put("points", spec.size());

    kw::OneForm alpha = cfg.alpha();
    const double div = kw::ops::validate_gauduchon(alpha, cfg.gauduchon_tol());
    out.put("alpha.divergence_sup", div);
    out.put("alpha.gauduchon", alpha.gauduchon_validated());

    for (const auto& name : field_keys()) {
        if (!cfg.has_field(name)) continue;
        const kw::ScalarField f = cfg.field(name);
        f.require_finite(name.c_str());
        out.put(name + ".min", f.min());
        out.put(name + ".max", f.max());
        out.put(name + ".mean", kw::ops::mean(f));
        out.put(name + ".sup", f.sup_norm());
    }
    if (!alpha.gauduchon_validated()) {
        throw kw::PreconditionError("Lee form is not Gauduchon: sup|div alpha| = " + format_double(div));
    }
    return ok;
}

inline int cmd_transform(const RunConfig& cfg, Output& out) {
    const auto setup = cfg.setup();
    const kw::OneForm alpha = cfg.alpha();
    const kw::ScalarField s = cfg.field("s");
    const kw::ScalarField u = cfg.field("u");
    put_setup(out, setup);
    out.field("s_hat", kw::geo::transform_s(s, u, alpha, setup));
    // The second law is written for the factor e^{2f}, so f = u / 2.
    const kw::ScalarField s2 = cfg.field_or("s2", 0.0);
    out.field("s2_hat", kw::geo::transform_s2(s2, u * 0.5, alpha, setup));
    return ok;
}

inline int cmd_reduce(const RunConfig& cfg, Output& out) {
    const auto setup = cfg.setup();
    const kw::OneForm alpha = cfg.alpha();
    const kw::ScalarField s = cfg.field("s");
    const kw::ScalarField s_hat = cfg.field("s_hat");
    put_setup(out, setup);
    const auto red = kw::geo::reduce(s, s_hat, alpha, setup, cfg.linear_options(), cfg.gauduchon_tol());
    out.put("gauduchon_degree", kw::geo::gauduchon_degree(s));
    out.put("c", red.c);
    const double scale = 2.0 / setup.k();
    kw::ScalarField r = kw::ops::chern_laplacian(alpha, red.g);
    const double sbar = kw::ops::mean(s);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= scale * (sbar - s[i]);
    out.put("g.residual", r.sup_norm());
    out.field("g", red.g);
    out.field("phi", red.phi);
    return ok;
}

inline int solve_and_report(const kw::ScalarField& s, const kw::ScalarField& s_hat, const kw::OneForm& alpha,
                            const kw::geo::GeometrySetup& setup, const RunConfig& cfg, Output& out,
                            const kw::ScalarField* u_star) {
    kw::solver::PipelineOptions opts;
    opts.kw = cfg.kw_options();
    opts.gauduchon_tol = cfg.gauduchon_tol();
    opts.strategy = kw::solver::parse_strategy(cfg.get("strategy").value_or("newton"));
    opts.continuation_steps = static_cast<int>(cfg.integer("steps", 10));
    put_setup(out, setup);
    const auto res = kw::solver::solve_prescribed(s, s_hat, alpha, setup, opts);
    if (res.reduced) {
        out.put("c", res.reduced->c);
        out.field("g", res.reduced->g);
        out.field("phi", res.reduced->phi);
    }
    if (res.necessary) {
        out.put("necessary.positive", res.necessary->positive);
        out.put("necessary.mean_negative", res.necessary->mean_negative);
        out.put("necessary.min_phi0", res.necessary->min_phi0);
    }
    if (res.super) {
        out.put("super.branch", res.super->branch);
        out.put("super.certified", res.super->ok());
        if (!res.super->ok()) out.put("super.failure", res.super->failure);
    }
    put_report(out, res.report);
    if (!res.report.trace.empty()) out.trace("trace", res.report);
    if (res.u) {
        out.put("residual", res.residual);
        out.field("u", *res.u);
        if (u_star) out.put("sup_error", kw::solver::sup_diff(*res.u, *u_star));
    }
    return exit_for(res.report.status);
}

inline int cmd_solve(const RunConfig& cfg, Output& out) {
    return solve_and_report(cfg.field("s"), cfg.field("s_hat"), cfg.alpha(), cfg.setup(), cfg, out, nullptr);
}

/// Manufactures s_hat from u_star, solves, and reports the recovery error.
/// With refine = r > 1 the transform is computed on a grid r times finer and
/// injected back, which removes most of the stencil error from the data.
inline int cmd_roundtrip(const RunConfig& cfg, Output& out) {
    const auto setup = cfg.setup();
    const kw::GridSpec spec = cfg.grid();
    const long refine = cfg.integer("refine", 1);
    if (refine < 1) throw kw::PreconditionError("refine must be >= 1");
    if (!cfg.has("u_star")) throw kw::PreconditionError("roundtrip needs u_star as an expression");
    const std::string u_text = cfg.require("u_star");
    const std::string s_text = cfg.get("s").value_or("-1");
    const std::vector<std::string> alpha_parts =
        cfg.has("alpha") ? split(cfg.require("alpha"), ';') : std::vector<std::string>{};
    if (cfg.has("alpha_file")) throw kw::PreconditionError("roundtrip needs alpha as expressions");

    auto build_alpha = [&](const kw::GridSpec& g) {
        std::vector<kw::ScalarField> comps;
        for (const auto& part : alpha_parts) comps.push_back(kw::expr::evaluate(part, g));
        while (comps.size() < g.rank()) comps.emplace_back(g, 0.0);
        return kw::OneForm(std::move(comps));
    };

    std::vector<std::size_t> fine_dims;
    for (std::size_t a = 0; a < spec.rank(); ++a) fine_dims.push_back(spec.dim(a) * static_cast<std::size_t>(refine));
    const kw::GridSpec fine(fine_dims);
    const kw::ScalarField s_fine = kw::expr::evaluate(s_text, fine);
    const kw::ScalarField s_hat_fine =
        kw::geo::transform_s(s_fine, kw::expr::evaluate(u_text, fine), build_alpha(fine), setup);

    kw::ScalarField s_hat(spec, 0.0);
    for (std::size_t i = 0; i < s_hat.size(); ++i) {
        kw::MultiIndex idx = spec.unravel(i);
        for (std::size_t a = 0; a < spec.rank(); ++a) idx[a] *= static_cast<std::size_t>(refine);
        s_hat[i] = s_hat_fine[fine.ravel(idx)];
    }
    const kw::ScalarField u_star = kw::expr::evaluate(u_text, spec);
    out.put("refine", static_cast<int>(refine));
    out.field("s_hat", s_hat);
    return solve_and_report(kw::expr::evaluate(s_text, spec), s_hat, build_alpha(spec), setup, cfg, out, &u_star);
}

inline int cmd_necessary(const RunConfig& cfg, Output& out) {
    const auto prob = kw_problem(cfg);
    const auto r = kw::solver::necessary_check(prob, cfg.linear_options());
    out.put("c", prob.c);
    out.put("positive", r.positive);
    out.put("mean_negative", r.mean_negative);
    out.put("min_phi0", r.min_phi0);
    out.put("mean_phi", r.mean_phi);
    out.field("phi0", r.phi0);
    out.put("status", r.passed() ? "passed" : "certified-unsolvable");
    return r.passed() ? ok : unsolvable;
}

inline double gamma_from(const RunConfig& cfg, const kw::solver::KWProblem& prob, double p) {
    const long samples = cfg.integer("samples", 16);
    const long seed = cfg.integer("seed", 1);
    if (samples < 1) throw kw::PreconditionError("samples must be >= 1");
    return kw::lin::estimate_gamma(prob.alpha, prob.c, p, static_cast<int>(samples),
                                   static_cast<std::uint64_t>(seed), cfg.linear_options());
}

inline int cmd_sufficient(const RunConfig& cfg, Output& out) {
    const auto prob = kw_problem(cfg);
    const double p = cfg.number("p", 2.0 * static_cast<double>(prob.spec().rank()) + 2.0);
    const double gamma = gamma_from(cfg, prob, p);
    const auto r = kw::solver::sufficient_check(prob, gamma, p);
    out.put("c", prob.c);
    out.put("p", p);
    out.put("gamma_hat", gamma);
    out.put("gamma_hat.kind", "heuristic-sampled");
    out.put("certified", r.certified);
    out.put("alpha_star", r.alpha_star);
    out.put("margin", r.margin);
    return ok;
}

inline int cmd_gamma(const RunConfig& cfg, Output& out) {
    kw::OneForm alpha = cfg.alpha();
    kw::geo::require_gauduchon(alpha, cfg.gauduchon_tol());
    const double c = cfg.number("c");
    const double p = cfg.number("p", 2.0 * static_cast<double>(alpha.rank()) + 2.0);
    const kw::solver::KWProblem prob(alpha, c, kw::ScalarField(alpha.spec(), 0.0));
    out.put("c", c);
    out.put("p", p);
    out.put("samples", static_cast<int>(cfg.integer("samples", 16)));
    out.put("gamma_hat", gamma_from(cfg, prob, p));
    out.put("gamma_hat.kind", "heuristic-sampled");
    return ok;
}

inline int cmd_critical(const RunConfig& cfg, Output& out) {
    kw::OneForm alpha = cfg.alpha();
    kw::geo::require_gauduchon(alpha, cfg.gauduchon_tol());
    kw::solver::BracketOptions opts;
    opts.search_floor = cfg.number("search_floor", opts.search_floor);
    opts.kw = cfg.kw_options();
    const auto br = kw::solver::critical_c_bracket(cfg.field("phi"), alpha, opts);
    out.put("c_lo", br.c_lo);
    out.put("c_hi", br.c_hi);
    out.put("lo_evidence", kw::solver::to_string(br.lo_evidence));
    out.put("hi_evidence", kw::solver::to_string(br.hi_evidence));
    out.put("minus_infinity", br.minus_infinity());
    out.put("probes", br.probes.size());
    std::vector<std::vector<double>> rows;
    for (const auto& pr : br.probes) rows.push_back({pr.c, static_cast<double>(pr.evidence)});
    out.table("probes", {"c", "evidence_code"}, rows);
    out.put("evidence_codes", "0=solved,1=necessary-failed,2=solver-failed,3=search-limit");
    return ok;
}

inline int cmd_asymptotic(const RunConfig& cfg, Output& out) {
    kw::OneForm alpha = cfg.alpha();
    kw::geo::require_gauduchon(alpha, cfg.gauduchon_tol());
    const auto c_list = cfg.number_list("c_list");
    const auto rows = kw::solver::asymptotic_suite(cfg.field("f"), alpha, c_list, cfg.linear_options());
    std::vector<std::vector<double>> table;
    for (const auto& r : rows) {
        table.push_back({r.c, r.deviation});
        out.put("deviation[" + format_double(r.c) + "]", r.deviation);
    }
    out.table("asymptotic", {"c", "deviation"}, table);
    return ok;
}

inline int cmd_construct(const RunConfig& cfg, Output& out) {
    kw::OneForm lee = cfg.alpha();
    kw::geo::require_gauduchon(lee, cfg.gauduchon_tol());
    const double c = cfg.number("c");
    const double a = cfg.number("alpha_const");
    const kw::ScalarField phi = kw::solver::construct_unsolvable(cfg.field("psi"), a, c, lee);
    out.put("c", c);
    out.put("alpha_const", a);
    out.put("mean_phi", kw::ops::mean(phi));
    out.field("phi", phi);
    return ok;
}

inline int cmd_degenerate(const RunConfig& cfg, Output& out) {
    const int n = static_cast<int>(cfg.integer("n", 2));
    if (n < 2) throw kw::PreconditionError("the degenerate parameter exists only for n >= 2");
    const double t = cfg.has("t") ? cfg.number("t") : 1.0 / (1.0 - n);
    const kw::geo::GeometrySetup setup(n, t);
    put_setup(out, setup);
    if (!setup.degenerate()) {
        throw kw::PreconditionError("t = " + format_double(t) + " is not degenerate for n = " + std::to_string(n) +
                                    " (expected t = 1/(1-n))");
    }
    const kw::ScalarField s = cfg.field("s");
    const kw::ScalarField s_hat = cfg.field("s_hat");
    const kw::ScalarField u = kw::geo::degenerate_solve(s, s_hat);
    double res = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) res = std::max(res, std::abs(s[i] - s_hat[i] * std::exp(u[i])));
    out.put("status", "converged");
    out.put("method", "pointwise");
    out.put("residual", res);
    out.field("u", u);
    return ok;
}

using Command = std::function<int(const RunConfig&, Output&)>;

inline const std::map<std::string, std::pair<Command, std::string>>& commands() {
    static const std::map<std::string, std::pair<Command, std::string>> table = {
        {"validate", {cmd_validate, "check the grid, the Lee form and every given field"}},
        {"transform", {cmd_transform, "conformal change of s and s2 by the factor u"}},
        {"reduce", {cmd_reduce, "reduce to the Kazdan-Warner form: c, g and phi"}},
        {"solve", {cmd_solve, "solve for the conformal factor u given s and s_hat"}},
        {"necessary", {cmd_necessary, "necessary-condition certificate for (phi, c)"}},
        {"sufficient", {cmd_sufficient, "sufficient-condition test with a sampled gamma"}},
        {"critical-c", {cmd_critical, "bracket the critical constant for phi"}},
        {"asymptotic", {cmd_asymptotic, "large-|c| behaviour of the linear problem"}},
        {"construct-unsolvable", {cmd_construct, "build phi failing the necessary condition"}},
        {"roundtrip", {cmd_roundtrip, "manufacture s_hat from u_star, solve, report the error"}},
        {"gamma-estimate", {cmd_gamma, "heuristic estimate of the a-priori constant gamma"}},
        {"degenerate-t", {cmd_degenerate, "pointwise solve at t = 1/(1-n)"}},
    };
    return table;
}

} // namespace kwcli
