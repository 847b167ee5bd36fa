#include "doctest.h"
#include "fixtures.hpp"
#include "ssdlasso/errors.hpp"
#include "ssdlasso/normal.hpp"
#include "ssdlasso/sym.hpp"

using namespace ssdlasso;

namespace {

QmcConfig qmc(int budget = 2048, bool shortcuts = true) {
    QmcConfig q;
    q.sample_budget = budget;
    q.exact_shortcuts = shortcuts;
    return q;
}

double closed_psi(int n, int k, int q, double beta, double lam) {
    const double r = std::sqrt(static_cast<double>(n));
    return std::pow(normal_cdf(r * (beta - lam)), k) * std::pow(2 * normal_cdf(r * lam) - 1, q);
}

}  // namespace

TEST_CASE("scenario validation and gamma") {
    SymScenario s{10, 4, 6, 2.0, 0.3};
    CHECK(std::fabs(s.gamma() - 0.3 / (1 + 0.3 * 3)) < 1e-12);
    CHECK(s.lower_c() == doctest::Approx(-1.0 / 9.0));
    CHECK_THROWS_AS(s.with_c(1.0).validate(), Error);
    CHECK_THROWS_AS(s.with_c(-0.2).validate(), Error);
    CHECK_NOTHROW(s.with_c(-0.1).validate());
}

TEST_CASE("c = 0 closed forms") {
    SymScenario s{10, 4, 6, 2.0, 0.0};
    std::vector<int> ones(4, 1);
    CHECK(sym_prob_sign_event(s, ones, 1.0, qmc()).value == doctest::Approx(std::pow(normal_cdf(std::sqrt(10.0)), 4)));
    CHECK(sym_prob_sign_event(s, ones, 1.0, qmc()).value == doctest::Approx(0.99687).epsilon(1e-5));
    CHECK(sym_prob_inactive_event(s, ones, 1.0, qmc()).value == doctest::Approx(0.99064).epsilon(1e-5));
    CHECK(sym_criterion_at_zero(10, 4, 6, 2.0, 1.0) == doctest::Approx(closed_psi(10, 4, 6, 2.0, 1.0)));
}

TEST_CASE("engine path agrees with the c = 0 closed form") {
    SymScenario s{10, 4, 6, 2.0, 0.0};
    for (double w = -3.0; w <= 1.0; w += 0.5) {
        const double lam = std::exp(w);
        auto known = sym_criterion(s, lam, SymSignMode::Known, qmc(2048, false));
        auto unknown = sym_criterion(s, lam, SymSignMode::Unknown, qmc(2048, false));
        const double want = closed_psi(10, 4, 6, 2.0, lam);
        CHECK(std::fabs(known.value - want) <= 3 * known.std_error + 1e-9);
        CHECK(std::fabs(unknown.value - want) <= 3 * unknown.std_error + 1e-9);
    }
}

TEST_CASE("balanced signs give a centred inactive vector") {
    SymScenario s{10, 4, 6, 2.0, 0.4};
    std::vector<int> balanced{1, -1, 1, -1};
    // mean zero: probability does not depend on which balanced vector is used
    auto a = sym_prob_inactive_event(s, balanced, 0.5, qmc());
    auto b = sym_prob_inactive_event(s, std::vector<int>{1, 1, -1, -1}, 0.5, qmc());
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
    CHECK(sym_prob_inactive_event(s, balanced, 40.0, qmc()).value == doctest::Approx(1.0));
    CHECK(sym_prob_sign_event(s.with_c(0.6), std::vector<int>(4, 1), 0.5, qmc()).value <= 1.0);
    SymScenario big{10, 4, 6, 50.0, 0.5};
    CHECK(sym_prob_sign_event(big, balanced, 1.0, qmc()).value > 1 - 1e-9);
}

TEST_CASE("k = 1 has a single sign class") {
    SymScenario s{10, 1, 5, 1.0, 0.2};
    auto a = sym_criterion(s, 0.5, SymSignMode::Known, qmc());
    auto b = sym_criterion(s, 0.5, SymSignMode::Unknown, qmc());
    CHECK(a.value == doctest::Approx(b.value));
}

TEST_CASE("summaries: integral at c = 0 via both paths, and the gain at 0.14") {
    SymScenario s{10, 4, 6, 2.0, 0.0};
    IntegralRule rule;
    auto closed = integrate_over_log_lambda(
        [](double w) {
            CriterionValue v;
            v.value = closed_psi(10, 4, 6, 2.0, std::exp(w));
            return v;
        },
        rule);
    auto engine = sym_summary(s, SymSignMode::Known, SummaryKind::Integral, qmc(1024, false));
    CHECK(std::fabs(closed.value - engine.value) <= 3 * engine.std_error + 1e-6);
    auto at014 = sym_summary(s.with_c(0.14), SymSignMode::Known, SummaryKind::Integral, qmc(1024));
    CHECK(at014.value > closed.value);
}

TEST_CASE("gain condition") {
    auto at_beta = known_sign_gain_condition(10, 2.0, 2.0);
    CHECK(at_beta.rhs == doctest::Approx(2 * normal_pdf(0.0)));
    CHECK(at_beta.holds == (2 * 2.0 * std::sqrt(10.0) >= 2 * normal_pdf(0.0)));
    CHECK(known_sign_gain_condition(10, 1e6, 0.1).holds);
    auto regions = condition_regions([](double w) { return known_sign_gain_condition(10, 2.0, std::exp(w)).holds; },
                                     -30.0, 2.0);
    REQUIRE(regions.size() == 1);
    CHECK(regions[0].first == doctest::Approx(-22.763).epsilon(0.05 / 22.763));
    CHECK(regions[0].second == 2.0);
}

TEST_CASE("local maximum condition") {
    CHECK_FALSE(orthogonal_local_max_condition(10, 1, 9, 2.0, 1.0).applicable);
    // lambda g(lambda) / G(Delta) tends to 1/2, so the left side tends to
    // q / C(k,2) * 1/2 * (k + (q - 1) / 2)
    auto small = orthogonal_local_max_condition(10, 4, 6, 2.0, 1e-8);
    CHECK(small.lhs == doctest::Approx(6.0 / 6.0 * 0.5 * (4 + 2.5)).epsilon(1e-6));
    auto regions = condition_regions(
        [](double w) { return orthogonal_local_max_condition(10, 4, 6, 2.0, std::exp(w)).holds; }, -5.0, 2.0);
    REQUIRE(regions.size() == 1);
    CHECK(regions[0].first == doctest::Approx(-0.988).epsilon(1e-3));
    CHECK(regions[0].second == doctest::Approx(0.640).epsilon(1e-3));
}

TEST_CASE("contour grid layout") {
    auto one = contour_grid(10, 4, 6, 2.0, SymSignMode::Known, {0.0, 0.0}, {0.0, 0.0}, 1, qmc());
    REQUIRE(one.size() == 1);
    CHECK(one[0].value == doctest::Approx(closed_psi(10, 4, 6, 2.0, 1.0)));
    auto grid = contour_grid(10, 4, 6, 2.0, SymSignMode::Known, {0.0, 0.5}, {-1.0, 1.0}, 3, qmc(1024));
    REQUIRE(grid.size() == 9);
    CHECK(grid[0].c == 0.0);
    CHECK(grid[1].c == 0.0);
    CHECK(grid[1].log_lambda == 0.0);
    CHECK(grid[3].c == 0.25);
    for (int j = 0; j < 3; ++j)
        CHECK(grid[j].value == doctest::Approx(closed_psi(10, 4, 6, 2.0, std::exp(grid[j].log_lambda))));
    auto csv = contour_csv(grid);
    CHECK(csv.rfind("c,log_lambda,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}

TEST_CASE("derivative of the inactive event vanishes at c = 0") {
    QmcConfig q = qmc(8192, false);
    auto rep = derivative_check(10, 4, 6, 2.0, 1.0, q);
    CHECK(std::fabs(rep.inactive.estimate) <= 5 * rep.inactive.bound + 1e-9);
    CHECK(rep.gain_condition);
    CHECK(rep.known.estimate > rep.known.bound);
}
