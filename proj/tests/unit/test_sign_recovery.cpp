#include "doctest.h"
#include "fixtures.hpp"
#include "ssdlasso/construct.hpp"
#include "ssdlasso/errors.hpp"
#include "ssdlasso/normal.hpp"
#include "ssdlasso/sign_recovery.hpp"

using namespace ssdlasso;

namespace {

bool agree(const CriterionValue& a, const CriterionValue& b, double slack = 1e-9) {
    return std::fabs(a.value - b.value) <= 3 * std::hypot(a.std_error, b.std_error) + slack;
}

Scenario scenario(Support s, std::vector<double> mags, std::vector<int> signs, double lambda) {
    return Scenario{std::move(s), std::move(mags), std::move(signs), lambda};
}

}  // namespace

TEST_CASE("orthogonal sign event is a product of cdfs") {
    auto sd = standardize(fixtures::hadamard_design(8, 7));
    auto sc = scenario({1, 4, 6}, {0.4, 0.9, 1.3}, {1, -1, 1}, 0.3);
    auto p = prob_sign_event(sd, sc, QmcConfig{});
    double want = 1;
    for (double b : sc.magnitudes) want *= normal_cdf(std::sqrt(8.0) * (b - 0.3));
    CHECK(std::fabs(p.value - want) <= 3 * p.std_error + 1e-12);

    auto huge = scenario({0, 2}, {100, 100}, {1, 1}, 1.0);
    CHECK(prob_sign_event(sd, huge, QmcConfig{}).value > 1 - 1e-12);
}

TEST_CASE("orthogonal inactive event and Hadamard closed form") {
    auto sd = standardize(fixtures::hadamard_design(8, 7));
    const double lam = 0.5, t = lam * std::sqrt(8.0);
    std::vector<int> sup{0, 1}, z{1, 1};
    auto pi = prob_inactive_event(sd, sup, z, lam, QmcConfig{});
    CHECK(pi.value == doctest::Approx(std::pow(2 * normal_cdf(t) - 1, 5)).epsilon(1e-10));
    auto phi = sign_recovery_probability(sd, Scenario::uniform({0, 1}, 1.0, lam), QmcConfig{});
    const double want = std::pow(normal_cdf(std::sqrt(8.0) * 0.5), 2) * std::pow(2 * normal_cdf(t) - 1, 5);
    CHECK(std::fabs(phi.value - want) <= 3 * phi.std_error + 1e-10);
    CHECK(prob_inactive_event(sd, sup, z, 50.0, QmcConfig{}).value == doctest::Approx(1.0));
}

TEST_CASE("constant padding makes the inactive event certain") {
    Design padded = pad_with_constant_columns(block_construction(16, 8, 4), 12);
    auto sd = standardize(padded);
    auto sc = Scenario::uniform({0, 1, 2, 3, 4, 5, 6, 7}, 1.0, 0.4);
    auto v = sign_recovery_probability(sd, sc, QmcConfig{});
    CHECK(v.p_i == 1.0);
    CHECK(v.value == v.p_s);
}

TEST_CASE("reflection symmetry and column sign flips") {
    QmcConfig q;
    q.sample_budget = 2048;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto d = fixtures::random_design(10, 14, seed);
        auto sd = standardize(d);
        auto sc = scenario({0, 3, 7}, {1.0, 1.5, 0.8}, {1, -1, 1}, 0.35);
        auto neg = sc;
        for (int& z : neg.signs) z = -z;
        CriterionValue a, b;
        try {
            a = sign_recovery_probability(sd, sc, q);
            b = sign_recovery_probability(sd, neg, q);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::SingularCA);
            continue;
        }
        CHECK(agree(a, b));
        // flipping the columns of negative effects gives the all-positive scenario
        std::vector<int> flip(14, 1);
        flip[3] = -1;
        auto flipped = standardize(d.with_column_signs(flip));
        auto plus = scenario({0, 3, 7}, {1.0, 1.5, 0.8}, {1, 1, 1}, 0.35);
        CHECK(agree(a, sign_recovery_probability(flipped, plus, q)));
    }
}

TEST_CASE("sign averages") {
    auto orth = standardize(fixtures::hadamard_design(8, 7));
    std::vector<double> mags{1.0, 1.0, 1.0};
    auto known = sign_averaged_probability(orth, {0, 1, 2}, mags, 0.5, SignVectorSet::known(), QmcConfig{});
    auto all = sign_averaged_probability(orth, {0, 1, 2}, mags, 0.5, SignVectorSet::all_half(), QmcConfig{});
    CHECK(agree(known, all));

    auto sd = standardize(fixtures::random_design(10, 8, 41));
    auto half = sign_averaged_probability(sd, {0, 2, 5}, mags, 0.4, SignVectorSet::all_half(), QmcConfig{});
    double total = 0;
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<int> z{mask & 1 ? -1 : 1, mask & 2 ? -1 : 1, mask & 4 ? -1 : 1};
        total += sign_recovery_probability(sd, scenario({0, 2, 5}, mags, z, 0.4), QmcConfig{}).value;
    }
    CHECK(std::fabs(half.value - total / 8) <= 3 * half.std_error + 2e-3);

    auto k1 = sign_averaged_probability(sd, {4}, {1.0}, 0.4, SignVectorSet::all_half(), QmcConfig{});
    auto k1k = sign_averaged_probability(sd, {4}, {1.0}, 0.4, SignVectorSet::known(), QmcConfig{});
    CHECK(k1.value == k1k.value);

    CHECK_THROWS_AS(SignVectorSet::from_list({{1, -1}, {-1, 1}}), Error);
}

TEST_CASE("support averages") {
    auto sd = standardize(fixtures::random_design(10, 8, 5));
    auto one = SupportSet::from_list({{1, 3}});
    auto avg = support_averaged_probability(sd, 2, 1.0, 0.5, one, SignVectorSet::known(), QmcConfig{});
    auto direct = sign_recovery_probability(sd, Scenario::uniform({1, 3}, 1.0, 0.5), QmcConfig{});
    CHECK(avg.value == doctest::Approx(direct.value));

    CHECK_THROWS_AS(SupportSet::from_list({}).validate(8, 2), Error);

    // permutation invariance of the exhaustive average
    auto d = fixtures::random_design(10, 8, 6);
    std::vector<int> order{7, 6, 5, 4, 3, 2, 1, 0};
    auto sp = standardize(d.with_columns(order));
    auto ex = SupportSet::exhaustive(8, 2);
    auto a = support_averaged_probability(standardize(d), 2, 1.0, 0.5, ex, SignVectorSet::all_half(), QmcConfig{});
    auto b = support_averaged_probability(sp, 2, 1.0, 0.5, ex, SignVectorSet::all_half(), QmcConfig{});
    CHECK(agree(a, b));
}

TEST_CASE("singular supports score zero and are counted") {
    IntMatrix x = fixtures::random_design(8, 5, 3).matrix();
    x.col(4) = x.col(0);
    auto sd = standardize(Design(x));
    auto set = SupportSet::from_list({{0, 4}, {1, 2}});
    auto v = support_averaged_probability(sd, 2, 1.0, 0.5, set, SignVectorSet::known(), QmcConfig{});
    CHECK(v.singular_supports == 1);
    auto good = sign_recovery_probability(sd, Scenario::uniform({1, 2}, 1.0, 0.5), QmcConfig{});
    CHECK(v.value == doctest::Approx(good.value / 2));
}

TEST_CASE("support recovery contains sign recovery") {
    auto orth = standardize(fixtures::hadamard_design(8, 7));
    auto sc = Scenario::uniform({2}, 0.5, 0.4);
    auto sup = support_recovery_probability(orth, sc, QmcConfig{});
    auto sgn = sign_recovery_probability(orth, sc, QmcConfig{});
    CHECK(sup.value >= sgn.value);
    auto big = Scenario::uniform({0, 5}, 50.0, 0.5);
    CHECK(std::fabs(support_recovery_probability(orth, big, QmcConfig{}).value -
                    sign_recovery_probability(orth, big, QmcConfig{}).value) < 1e-3);
    auto sd = standardize(fixtures::random_design(10, 8, 9));
    auto s3 = scenario({0, 2, 6}, {0.6, 0.6, 0.6}, {1, -1, 1}, 0.3);
    CHECK(support_recovery_probability(sd, s3, QmcConfig{}).value >=
          sign_recovery_probability(sd, s3, QmcConfig{}).value - 1e-3);
    Scenario many = Scenario::uniform({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}, 1.0, 0.5);
    CHECK_THROWS_AS(support_recovery_probability(standardize(fixtures::random_design(20, 14, 1)), many, QmcConfig{}),
                    Error);
}

TEST_CASE("monotone in effect size, inactive event unchanged") {
    auto sd = standardize(fixtures::random_design(12, 10, 17));
    std::vector<int> sup{1, 4, 8}, z{1, -1, 1};
    double prev = 0;
    for (double b : {0.3, 0.6, 1.0, 1.5}) {
        auto ps = prob_sign_event(sd, scenario(sup, {b, b, b}, z, 0.3), QmcConfig{});
        CHECK(ps.value >= prev - 3 * ps.std_error);
        prev = ps.value;
    }
}

TEST_CASE("max over log lambda") {
    auto zero = maximize_over_log_lambda([](double) { return CriterionValue{}; });
    CHECK(zero.value == 0.0);
    auto bump = maximize_over_log_lambda([](double w) {
        CriterionValue v;
        v.value = std::exp(-(w + 0.37) * (w + 0.37));
        return v;
    });
    CHECK(std::log(bump.lambda_at) == doctest::Approx(-0.37).epsilon(1e-6));

    // orthogonal closed form with k = 2, q = 5, n = 8, beta = 1 against a dense scan
    auto closed = [](double w) {
        const double l = std::exp(w), r = std::sqrt(8.0);
        CriterionValue v;
        v.value = std::pow(normal_cdf(r * (1 - l)), 2) * std::pow(2 * normal_cdf(r * l) - 1, 5);
        return v;
    };
    double dense = 0;
    for (int i = 0; i <= 10000; ++i) dense = std::max(dense, closed(-5.0 + 7.0 * i / 10000).value);
    CHECK(std::fabs(maximize_over_log_lambda(closed).value - dense) < 1e-4);
}

TEST_CASE("integral over log lambda") {
    auto flat = integrate_over_log_lambda([](double) { return CriterionValue{}; });
    CHECK(flat.value == 0.0);
    IntegralRule rule;
    rule.step = 0.01;
    rule.epsilon = 1e-6;
    auto pulse = integrate_over_log_lambda(
        [](double w) {
            CriterionValue v;
            v.value = (w >= 0.0 && w <= 2.0) ? 1.0 : 0.0;
            return v;
        },
        rule);
    CHECK(pulse.value == doctest::Approx(2.0).epsilon(0.01 / 2.0));
    rule.step = 0.0;
    CHECK_THROWS_AS(integrate_over_log_lambda([](double) { return CriterionValue{}; }, rule), Error);

    auto smooth = [](double w) {
        CriterionValue v;
        v.value = std::exp(-w * w);
        return v;
    };
    IntegralRule a, b;
    a.epsilon = b.epsilon = 0.0;
    a.step = 0.05;
    b.step = 0.025;
    const double ia = integrate_over_log_lambda(smooth, a).value, ib = integrate_over_log_lambda(smooth, b).value;
    CHECK(std::fabs(ia - ib) / ib < 0.02);
    CHECK(ib == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-3));
}

TEST_CASE("criterion curve matches the direct average") {
    auto sd = standardize(fixtures::random_design(9, 7, 13));
    auto set = SupportSet::exhaustive(7, 2);
    CriterionCurve curve(sd, 2, 1.5, set, SignVectorSet::all_half(), QmcConfig{});
    for (double lam : {0.2, 0.5, 0.9}) {
        auto a = curve.at_lambda(lam);
        auto b = support_averaged_probability(sd, 2, 1.5, lam, set, SignVectorSet::all_half(), QmcConfig{});
        CHECK(agree(a, b, 2e-3));
    }
    auto rows = tabulate(curve.evaluator(), std::vector<double>{-1.0, 0.0});
    CHECK(rows.size() == 2);
    auto csv = curve_csv(rows);
    CHECK(csv.rfind("log_lambda,value,p_s,p_i\n", 0) == 0);
}
