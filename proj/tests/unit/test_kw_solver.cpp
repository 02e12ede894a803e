#include "catch_amalgamated.hpp"

#include <random>

#include "kwsolve/expr.hpp"
#include "kwsolve/kwsolve.hpp"
#include "kwsolve/random_fields.hpp"

using namespace kw;
using namespace kw::solver;
using Catch::Matchers::ContainsSubstring;

namespace {

ScalarField F(const char* text, const GridSpec& g) { return expr::evaluate(text, g); }
double err(const ScalarField& a, const ScalarField& b) { return (a - b).sup_norm(); }

// phi that makes w* an exact solution of the discrete equation with constant c.
ScalarField manufacture_phi(const OneForm& a, double c, const ScalarField& w_star) {
    ScalarField phi = ops::chern_laplacian(a, w_star);
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = (phi[i] + c) * std::exp(-w_star[i]);
    return phi;
}

bool verified(const KWProblem& prob, const SolveReport& rep) {
    return kw_residual(prob, rep.w).sup_norm() <= 1e-9 * residual_scale(prob, rep.w);
}

SolveReport monotone_from_barriers(const KWProblem& prob, const KWOptions& opts = {}) {
    const auto super = build_supersolution(prob);
    REQUIRE(super.ok());
    return monotone_solve(prob, build_subsolution(prob), *super.w, opts);
}

} // namespace

TEST_CASE("barrier predicates", "[kw]") {
    const GridSpec g({64});
    const ScalarField zero(g, 0.0);
    const OneForm a0 = OneForm::zero(g);

    auto sub = is_subsolution(zero, {a0, -1.0, ScalarField(g, -1.0)});
    CHECK(sub.ok);
    CHECK(sub.margin == 0.0);
    sub = is_subsolution(zero, {a0, 1.0, ScalarField(g, -1.0)});
    CHECK_FALSE(sub.ok);
    CHECK(sub.margin == 2.0);
    CHECK(is_subsolution(ScalarField(g, -10.0), {a0, -1.0, F("sin(x0)", g)}).ok);

    auto super = is_supersolution(zero, {a0, -1.0, ScalarField(g, -1.0)});
    CHECK(super.ok);
    CHECK(super.margin == 0.0);
    super = is_supersolution(zero, {a0, -1.0, ScalarField(g, 1.0)});
    CHECK_FALSE(super.ok);
    CHECK(super.margin == -2.0);
    CHECK(is_supersolution(ScalarField(g, -10.0), {a0, 1.0, F("sin(x0)", g)}).ok);
}

TEST_CASE("build_subsolution", "[kw]") {
    const GridSpec g({64});
    const OneForm a0 = OneForm::zero(g);
    const ScalarField w = build_subsolution({a0, -1.0, ScalarField(g, -1.0)});
    CHECK(w.max() == Catch::Approx(-0.1));
    CHECK(w.min() == w.max());
    CHECK(build_subsolution({a0, -1.0, ScalarField(g, 2.0)}).sup_norm() == 0.0);
    CHECK_THROWS_AS(build_subsolution({a0, 0.5, ScalarField(g, -1.0)}), PreconditionError);
}

TEST_CASE("build_supersolution", "[kw]") {
    const GridSpec g({128});
    const OneForm a0 = OneForm::zero(g);

    SECTION("constant phi") {
        const KWProblem prob(a0, -1.0, ScalarField(g, -1.0));
        const auto r = build_supersolution(prob);
        REQUIRE(r.ok());
        CHECK(r.w->min() == r.w->max());
        CHECK(std::exp(r.w->max()) > 1.0);
        CHECK(is_supersolution(*r.w, prob).ok);
    }
    SECTION("phi <= 0 with zeros") {
        const KWProblem prob(a0, -0.5, F("-(1+sin(x0))", g));
        const auto r = build_supersolution(prob);
        REQUIRE(r.ok());
        CHECK(r.branch == 1);
        CHECK(r.a * ops::mean(prob.phi) < prob.c);
        CHECK(is_supersolution(*r.w, prob).ok);
    }
    SECTION("sign-changing phi") {
        // v = sin(x0), and |e^{a sin} - 1| <= 1/6 caps a at log(7/6) ~ 0.154,
        // while c = -0.05 needs a >= 0.2: no admissible a exists.
        const ScalarField phi = F("sin(x0)-0.5", g);
        const auto fail = build_supersolution({a0, -0.05, phi});
        CHECK_FALSE(fail.ok());
        CHECK_THAT(fail.failure, ContainsSubstring("cannot certify"));
        CHECK(fail.a == Catch::Approx(std::log(7.0 / 6.0)).epsilon(1e-4));

        const KWProblem prob(a0, -0.03, phi);
        const auto r = build_supersolution(prob);
        REQUIRE(r.ok());
        CHECK(r.branch == 2);
        CHECK(r.a * (-0.25) <= -0.03);
        CHECK(is_supersolution(*r.w, prob).ok);
    }
    SECTION("positive mean") {
        CHECK_THROWS_WITH(build_supersolution({a0, -1.0, F("sin(x0)+0.5", g)}),
                          ContainsSubstring("necessary condition violated"));
    }
}

TEST_CASE("monotone iteration", "[kw]") {
    const GridSpec g({128});
    const OneForm a0 = OneForm::zero(g);

    SECTION("constant solution") {
        const KWProblem prob(a0, -1.0, ScalarField(g, -1.0));
        const auto rep = monotone_from_barriers(prob);
        REQUIRE(rep.converged());
        CHECK(rep.method == Method::monotone);
        CHECK(rep.w.sup_norm() < 1e-8);
        CHECK(rep.residual < 1e-8);
    }
    SECTION("manufactured solution, with pointwise monotone iterates") {
        const ScalarField w_star = F("0.3*cos(x0)", g);
        const ScalarField phi = F("(0.3*cos(x0)-1)*exp(-0.3*cos(x0))", g);
        REQUIRE(phi.max() <= 0.0);
        const KWProblem prob(a0, -1.0, phi);
        const ScalarField w_minus = build_subsolution(prob);
        const auto super = build_supersolution(prob);
        REQUIRE(super.ok());

        ScalarField previous = w_minus;
        bool monotone = true, below = true;
        const auto rep = monotone_solve(prob, w_minus, *super.w, {}, [&](int, const ScalarField& w) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                monotone = monotone && w[i] >= previous[i] - 1e-10;
                below = below && w[i] <= (*super.w)[i] + 1e-10;
            }
            previous = w;
        });
        REQUIRE(rep.converged());
        CHECK(monotone);
        CHECK(below);
        for (std::size_t i = 1; i < rep.trace.size(); ++i) CHECK(rep.trace[i] >= rep.trace[i - 1] - 1e-10);
        CHECK(err(rep.w, w_star) < 1e-6);
        CHECK(verified(prob, rep));
    }
    SECTION("the fixed-lambda scheme reaches the same solution") {
        const KWProblem prob(a0, -1.0, F("(0.3*cos(x0)-1)*exp(-0.3*cos(x0))", g));
        KWOptions fixed;
        fixed.adaptive_lambda = false;
        const auto super = build_supersolution(prob);
        REQUIRE(super.ok());
        const auto rep = monotone_solve(prob, build_subsolution(prob), *super.w, fixed);
        REQUIRE(rep.converged());
        CHECK(rep.lambda == Catch::Approx(1.0 + std::exp(super.w->max()) * prob.phi.sup_norm()));
        CHECK(err(rep.w, monotone_from_barriers(prob).w) < 1e-8);
    }
    SECTION("drifted 2-torus") {
        const GridSpec g2({32, 32});
        const OneForm a({F("0.5*sin(x1)", g2), F("0.3*cos(x0)", g2)});
        const ScalarField w_star = F("0.2*sin(x0)*cos(x1)+0.1*cos(2*x1)", g2);
        const KWProblem prob(a, -0.8, manufacture_phi(a, -0.8, w_star));
        const auto rep = monotone_from_barriers(prob);
        REQUIRE(rep.converged());
        CHECK(err(rep.w, w_star) < 1e-7);
    }
    SECTION("misordered barriers") {
        const KWProblem prob(a0, -1.0, ScalarField(g, -1.0));
        CHECK_THROWS_AS(monotone_solve(prob, ScalarField(g, 0.5), ScalarField(g, -0.5)), PreconditionError);
        CHECK_THROWS_AS(monotone_solve(prob, ScalarField(g, 0.5), ScalarField(g, 1.0)), PreconditionError);
    }
}

TEST_CASE("newton", "[kw]") {
    const GridSpec g({256});
    const OneForm a0 = OneForm::zero(g);

    const auto rep = newton_solve({a0, -1.0, ScalarField(g, -1.0)}, ScalarField(g, 0.5));
    REQUIRE(rep.converged());
    CHECK(rep.method == Method::newton);
    CHECK(rep.w.sup_norm() < 1e-9);

    const KWProblem pos(a0, 1.0, F("(0.1*sin(x0)+1)*exp(-0.1*sin(x0))", g));
    const auto p = newton_solve(pos, ScalarField(g, 0.0));
    REQUIRE(p.converged());
    CHECK(err(p.w, F("0.1*sin(x0)", g)) < 1e-6);
    CHECK(verified(pos, p));

    const auto bad = newton_solve({a0, -1.0, F("sin(x0)+0.5", g)}, ScalarField(g, 0.0));
    CHECK_FALSE(bad.converged());
    CHECK_FALSE(bad.message.empty());
}

TEST_CASE("necessary condition", "[kw]") {
    const GridSpec g({128});
    const OneForm a0 = OneForm::zero(g);

    const auto r = necessary_check({a0, -1.0, ScalarField(g, -1.0)});
    CHECK(r.positive);
    CHECK(r.mean_negative);
    CHECK(err(r.phi0, ScalarField(g, 1.0)) < 1e-12);

    const ScalarField phi = construct_unsolvable(F("sin(x0)", g), 0.1, -1.0, a0);
    const auto u = necessary_check({a0, -1.0, phi});
    CHECK_FALSE(u.positive);
    CHECK(u.mean_negative);
    CHECK(err(u.phi0, F("sin(x0)+0.1", g)) < 1e-9);

    const auto m = necessary_check({a0, -1.0, F("-2+sin(x0)", g)});
    CHECK(m.positive);
    CHECK(m.passed());

    CHECK_THROWS_AS(necessary_check({a0, 0.0, ScalarField(g, -1.0)}), PreconditionError);
}

TEST_CASE("sufficient condition", "[kw]") {
    const GridSpec g({64});
    const OneForm a0 = OneForm::zero(g);

    for (double gamma : {0.5, 3.0, 100.0}) {
        const auto r = sufficient_check({a0, -1.0, ScalarField(g, -1.0)}, gamma, 4.0);
        CHECK(r.certified);
        CHECK(r.alpha_star == -1.0);
    }
    for (double gamma : {1.0, 10.0}) {
        const auto r = sufficient_check({a0, -1.0, ScalarField(g, 1.0)}, gamma, 4.0);
        CHECK_FALSE(r.certified);
        CHECK(r.alpha_star == 0.0);
    }
    const auto near = sufficient_check({a0, -1.0, F("-1+0.01*sin(x0)", g)}, 2.0, 4.0);
    CHECK(near.certified);
    CHECK(near.alpha_star == -1.0);
    CHECK_THROWS_AS(sufficient_check({a0, -1.0, ScalarField(g, -1.0)}, 0.0, 4.0), PreconditionError);
}

TEST_CASE("construct_unsolvable", "[kw]") {
    const GridSpec g({128});
    const OneForm a0 = OneForm::zero(g);
    const ScalarField phi = construct_unsolvable(F("sin(x0)", g), 0.1, -1.0, a0);
    CHECK(err(phi, F("-2*sin(x0)-0.1", g)) < 1e-7);
    CHECK(ops::mean(phi) == Catch::Approx(-0.1).epsilon(1e-12));

    CHECK_THROWS_WITH(construct_unsolvable(F("sin(x0)", g), 2.0, -1.0, a0), ContainsSubstring("change sign"));
    CHECK_THROWS_AS(construct_unsolvable(F("1+sin(x0)", g), 0.1, -1.0, a0), PreconditionError);

    // With a Lee form the certificate holds just the same.
    const GridSpec g2({32, 32});
    const OneForm lee({F("0.4*cos(x1)", g2), F("0.3*sin(x0)", g2)});
    const ScalarField psi = F("sin(x0+x1)+0.5*cos(2*x1)", g2);
    const ScalarField phi2 = construct_unsolvable(psi, 0.2, -2.0, lee);
    const auto r = necessary_check({lee, -2.0, phi2});
    CHECK(err(r.phi0, psi + ScalarField(g2, 0.2)) < 1e-9);
    CHECK_FALSE(r.positive);
    CHECK(ops::mean(phi2) == Catch::Approx(-0.4).epsilon(1e-10));
}

TEST_CASE("asymptotic law", "[kw]") {
    const GridSpec g({256});
    const OneForm a0 = OneForm::zero(g);
    const std::vector<double> cs{-1.0, -9.0, -99.0, -999.0};

    for (const auto& row : asymptotic_suite(ScalarField(g, 1.0), a0, cs)) CHECK(row.deviation < 1e-12);

    const auto rows = asymptotic_suite(F("sin(x0)", g), a0, cs);
    REQUIRE(rows.size() == 4);
    CHECK(rows[1].deviation == Catch::Approx(0.1).epsilon(1e-6));
    CHECK(rows[2].deviation == Catch::Approx(0.01).epsilon(1e-6));

    const GridSpec g2({32, 32});
    const auto drifted = asymptotic_suite(F("cos(x0)*sin(2*x1)+0.3", g2),
                                          OneForm({F("0.5*sin(x1)", g2), ScalarField(g2, 0.2)}), cs);
    for (std::size_t i = 1; i < drifted.size(); ++i) CHECK(drifted[i].deviation <= drifted[i - 1].deviation);

    const std::vector<double> bad{-1.0, 0.0};
    CHECK_THROWS_AS(asymptotic_suite(ScalarField(g, 1.0), a0, bad), PreconditionError);
}

TEST_CASE("critical constant bracket", "[kw][slow]") {
    const GridSpec g({32});
    const OneForm a0 = OneForm::zero(g);

    SECTION("phi <= 0 gives the minus-infinity sentinel") {
        const Bracket br = critical_c_bracket(ScalarField(g, -1.0), a0);
        CHECK(br.minus_infinity());
        CHECK(br.c_lo == -1e6);
        CHECK(br.c_hi < 0.0);
        for (const auto& p : br.probes) CHECK(p.evidence == Evidence::solved);
        CHECK(br.probes.back().c == -1e6);
    }
    SECTION("certified-unsolvable instance") {
        const ScalarField phi = construct_unsolvable(F("sin(x0)", g), 0.1, -1.0, a0);
        const Bracket br = critical_c_bracket(phi, a0);
        CHECK_FALSE(br.minus_infinity());
        CHECK(br.c_lo >= -1.0);
        CHECK(br.c_lo <= br.c_hi);
        CHECK(br.c_hi < 0.0);
        CHECK(br.c_hi - br.c_lo <= 0.01 * std::abs(br.c_hi));
        CHECK(br.hi_evidence == Evidence::solved);
    }
    SECTION("positive mean") {
        CHECK_THROWS_AS(critical_c_bracket(F("sin(x0)+0.5", g), a0), PreconditionError);
    }
}

TEST_CASE("fixed-point solver", "[kw]") {
    const GridSpec g({128});
    const OneForm a0 = OneForm::zero(g);
    const geo::GeometrySetup setup(1, 1.0);

    const auto triv = fixed_point_solve(ScalarField(g, -1.0), ScalarField(g, -1.0), a0, setup);
    REQUIRE(triv.converged());
    CHECK(triv.w.sup_norm() == 0.0);
    CHECK(triv.iterations == 1);

    const ScalarField s(g, -1.0);
    const ScalarField u_star = F("0.05*sin(x0)", g);
    const ScalarField s_hat = geo::transform_s(s, u_star, a0, setup);
    const auto rep = fixed_point_solve(s, s_hat, a0, setup);
    REQUIRE(rep.converged());
    CHECK(rep.method == Method::fixed_point);
    CHECK(err(rep.w, u_star) < 1e-8);

    CHECK_THROWS_AS(fixed_point_solve(s, ScalarField(g, 0.0), a0, setup), SolverError);
}

TEST_CASE("continuation solver", "[kw]") {
    const GridSpec g({128});
    const OneForm a0 = OneForm::zero(g);
    const geo::GeometrySetup setup(1, 1.0);

    const auto zero = continuation_solve(ScalarField(g, 0.0), ScalarField(g, 0.0), a0, setup, 5);
    REQUIRE(zero.converged());
    CHECK(zero.w.sup_norm() == 0.0);
    CHECK(zero.tau_reached == 1.0);

    const ScalarField s = F("0.02*cos(x0)", g);
    const ScalarField u_star = F("0.04*sin(x0)", g);
    const ScalarField s_hat = geo::transform_s(s, u_star, a0, setup);
    const auto rep = continuation_solve(s, s_hat, a0, setup, 1);
    REQUIRE(rep.converged());
    CHECK(rep.method == Method::continuation);
    CHECK(err(rep.w, u_star) < 1e-8);

    // Here mean(s) = 0 but mean(s_hat) != 0, so the scaled data (tau s, tau s_hat)
    // has no solution for tau < 1: integrating forces mean(s_hat e^u) = 0. Newton
    // can only shrink F by sliding u toward -infinity, which must not count as a solution.
    const auto path = continuation_solve(s, s_hat, a0, setup, 4);
    CHECK_FALSE(path.converged());
    CHECK(path.tau_reached == 0.0);
    CHECK(path.w.min() > -1.0);

    // s > 0 and s_hat < 0: integrating gives mean(s) = mean(s_hat e^u) < 0, a contradiction.
    const auto bad = continuation_solve(ScalarField(g, 1.0), ScalarField(g, -1.0), a0, setup, 4);
    CHECK_FALSE(bad.converged());
    CHECK(bad.tau_reached < 1.0);
    CHECK_THAT(bad.message, ContainsSubstring("tau"));
    CHECK_THROWS_AS(continuation_solve(s, s, a0, setup, 0), PreconditionError);
}

TEST_CASE("solve_prescribed", "[kw]") {
    SECTION("constant data, negative c") {
        const GridSpec g({64});
        const auto r = solve_prescribed(ScalarField(g, -1.0), ScalarField(g, -1.0), OneForm::zero(g), {1, 1.0});
        REQUIRE(r.report.converged());
        CHECK(r.report.method == Method::monotone);
        CHECK(r.reduced->c == Catch::Approx(-2.0));
        CHECK(r.u->sup_norm() < 1e-8);
    }
    SECTION("degenerate parameter round trip on a 4-torus") {
        const GridSpec g({64, 8, 8, 8});
        const OneForm a = OneForm::constant(g, std::vector<double>{0.2, 0.0, 0.1, 0.0});
        const geo::GeometrySetup setup(2, -1.0);
        const ScalarField u_star = F("0.4*sin(x0)+0.2*cos(2*x0)", g);
        const ScalarField s(g, -1.0);
        const auto r = solve_prescribed(s, geo::transform_s(s, u_star, a, setup), a, setup);
        REQUIRE(r.report.converged());
        CHECK(r.report.method == Method::pointwise);
        CHECK(err(*r.u, u_star) < 1e-14);
    }
    SECTION("negative c round trip with a drift") {
        const GridSpec g({64, 64});
        const OneForm a({F("0.3*sin(x1)", g), ScalarField(g, 0.0)});
        const geo::GeometrySetup setup(2, 0.0);
        const ScalarField s = F("-1+0.3*cos(x1)", g);
        const ScalarField u_star = F("0.3*sin(x0)+0.1*cos(x0+x1)", g);
        const auto r = solve_prescribed(s, geo::transform_s(s, u_star, a, setup), a, setup);
        REQUIRE(r.report.converged());
        CHECK(r.necessary->passed());
        CHECK(err(*r.u, u_star) < 1e-7);
        CHECK(r.residual < 1e-8);
    }
    SECTION("certified unsolvable") {
        // s = -1/2 constant gives c = -1 and g = 0, so phi = 2 s_hat.
        const GridSpec g({64});
        const OneForm a0 = OneForm::zero(g);
        const ScalarField phi = construct_unsolvable(F("sin(x0)", g), 0.1, -1.0, a0);
        const auto r = solve_prescribed(ScalarField(g, -0.5), 0.5 * phi, a0, {1, 1.0});
        CHECK(r.report.status == Status::certified_unsolvable);
        CHECK_FALSE(r.u.has_value());
        CHECK_FALSE(r.necessary->positive);
    }
    SECTION("zero c with vanishing s_hat is linear") {
        const GridSpec g({128});
        const auto r = solve_prescribed(F("sin(x0)", g), ScalarField(g, 0.0), OneForm::zero(g), {1, 1.0});
        REQUIRE(r.report.converged());
        CHECK(r.report.method == Method::linear);
        CHECK(err(*r.u, F("-2*sin(x0)", g)) < 1e-6);
    }
    SECTION("positive c with every strategy") {
        const GridSpec g({128});
        const OneForm a0 = OneForm::zero(g);
        const geo::GeometrySetup setup(1, 1.0);
        const ScalarField s(g, 0.2);
        const ScalarField u_star = F("0.1*sin(x0)", g);
        const ScalarField s_hat = geo::transform_s(s, u_star, a0, setup);
        for (const char* name : {"newton", "fixed-point", "continuation"}) {
            PipelineOptions opts;
            opts.strategy = parse_strategy(name);
            const auto r = solve_prescribed(s, s_hat, a0, setup, opts);
            INFO(name);
            REQUIRE(r.report.converged());
            CHECK(err(*r.u, u_star) < 1e-8);
        }
        CHECK_THROWS_AS(parse_strategy("magic"), PreconditionError);
    }
}

TEST_CASE("monotone and newton agree from distinct starts", "[kw][property]") {
    std::mt19937_64 rng(77);
    const GridSpec g({32, 32});
    for (int trial = 0; trial < 3; ++trial) {
        const OneForm a = ops::stream_one_form(0.3 * random_smooth_field(g, rng, 2), 0, 1);
        const ScalarField phi = map(random_smooth_field(g, rng, 2), [](double v) { return -1.5 + 0.3 * v; });
        REQUIRE(phi.max() < 0.0);
        const KWProblem prob(a, -1.0, phi);
        const auto mono = monotone_from_barriers(prob);
        const auto newton = newton_solve(prob, ScalarField(g, 1.0));
        REQUIRE(mono.converged());
        REQUIRE(newton.converged());
        CHECK(err(mono.w, newton.w) < 1e-6);

        // Whenever a solve succeeds for c < 0 the necessary condition holds.
        CHECK(necessary_check(prob).passed());
    }
}

TEST_CASE("scaling equivariance", "[kw][property]") {
    const GridSpec g({64});
    const OneForm a({ScalarField(g, 0.3)});
    const ScalarField phi = F("-1-0.5*sin(x0)", g);
    const double lambda = 5.0;
    const auto w1 = monotone_from_barriers({a, -0.7, phi});
    const auto w2 = monotone_from_barriers({a, -0.7, lambda * phi});
    REQUIRE(w1.converged());
    REQUIRE(w2.converged());
    CHECK(err(w2.w, w1.w - ScalarField(g, std::log(lambda))) < 1e-8);
}

TEST_CASE("comparison of super-solutions", "[kw][property]") {
    std::mt19937_64 rng(13);
    const GridSpec g({64});
    const OneForm a0 = OneForm::zero(g);
    const ScalarField phi = F("sin(x0)-0.5", g);
    const KWProblem prob(a0, -0.03, phi);
    const auto super = build_supersolution(prob);
    REQUIRE(super.ok());
    for (int trial = 0; trial < 5; ++trial) {
        const ScalarField lower = phi - map(random_smooth_field(g, rng), [](double v) { return std::abs(v); });
        CHECK(is_supersolution(*super.w, {a0, -0.03, lower}).ok);
    }
}

TEST_CASE("status and method names", "[kw]") {
    CHECK(std::string(to_string(Status::certified_unsolvable)) == "certified-unsolvable");
    CHECK(std::string(to_string(Status::max_iter)) == "max-iter");
    CHECK(std::string(to_string(Method::fixed_point)) == "fixed-point");
    CHECK(std::string(to_string(Evidence::search_limit)) == "search-limit");
}
