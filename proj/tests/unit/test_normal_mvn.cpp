#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "ssdlasso/errors.hpp"
#include "ssdlasso/mvn.hpp"
#include "ssdlasso/normal.hpp"

using namespace ssdlasso;
using fixtures::series_cdf;

namespace {

GaussianRegion region(Eigen::VectorXd mean, Eigen::MatrixXd cov, Eigen::VectorXd lo, Eigen::VectorXd hi) {
    return GaussianRegion{std::move(mean), std::move(cov), std::move(lo), std::move(hi)};
}

QmcConfig qmc_only(int budget = 4096, int reps = 8, std::uint64_t seed = 7) {
    QmcConfig q;
    q.sample_budget = budget;
    q.randomizations = reps;
    q.seed = seed;
    q.exact_shortcuts = false;
    return q;
}

constexpr double inf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("normal cdf, pdf and quantile") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(inf) == 1.0);
    CHECK(normal_cdf(-inf) == 0.0);
    CHECK(normal_cdf(1.96) == doctest::Approx(0.9750).epsilon(1e-4));
    for (double x : {-5.0, -2.5, -1.0, -0.3, 0.7, 1.96, 3.2, 5.5})
        CHECK(std::fabs(normal_cdf(x) - series_cdf(x)) < 1e-12);
    CHECK(normal_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2 * M_PI)));
    for (double p : {1e-10, 0.01, 0.3, 0.5, 0.975, 0.999999})
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    CHECK_THROWS_AS(normal_quantile(1.5), Error);
}

TEST_CASE("inverse mills ratio stays finite in the far left tail") {
    CHECK(inverse_mills(0.0) == doctest::Approx(2.0 * normal_pdf(0.0)));
    // asymptotically pdf/cdf ~ -x for x -> -inf
    CHECK(inverse_mills(-40.0) == doctest::Approx(40.0 + 1.0 / 40.0).epsilon(1e-4));
    CHECK(inverse_mills(-1e3) == doctest::Approx(1e3).epsilon(1e-5));
    CHECK(inverse_mills(40.0) < 1e-300);
    double prev = inverse_mills(-60.0);
    for (double x = -59.5; x < 10.0; x += 0.5) {
        double v = inverse_mills(x);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("factorize_psd") {
    auto id = factorize_psd(Eigen::MatrixXd::Identity(3, 3), 1e-10);
    CHECK(id.rank == 3);
    CHECK((id.factor * id.factor.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);

    auto ones = factorize_psd(Eigen::MatrixXd::Ones(2, 2), 1e-10);
    CHECK(ones.rank == 1);
    CHECK(std::fabs(std::fabs(ones.factor(0, 0)) - 1.0) < 1e-12);
    CHECK(ones.factor(0, 0) == doctest::Approx(ones.factor(1, 0)));

    // (1-c)(I + gamma J) with c = 0.5, k = 4, q = 3
    const double c = 0.5, gamma = c / (1 + c * 3);
    Eigen::MatrixXd cov = (1 - c) * (Eigen::MatrixXd::Identity(3, 3) + gamma * Eigen::MatrixXd::Ones(3, 3));
    auto f = factorize_psd(cov, 1e-10);
    CHECK(f.rank == 3);
    CHECK((f.factor * f.factor.transpose() - cov).norm() / cov.norm() < 1e-8);

    Eigen::MatrixXd bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(factorize_psd(bad, 1e-10), Error);
}

TEST_CASE("box probability closed-form examples") {
    const double square = std::pow(2 * normal_cdf(1.0) - 1, 2);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, -1.0), hi = Eigen::VectorXd::Constant(2, 1.0);
    auto exact = box_probability(region(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), lo, hi), QmcConfig{});
    CHECK(exact.value == doctest::Approx(0.46607).epsilon(1e-4));
    CHECK(exact.std_error == 0.0);
    auto est = box_probability(region(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), lo, hi), qmc_only());
    CHECK(std::fabs(est.value - square) <= 3 * est.std_error + 1e-12);

    auto degenerate = box_probability(region(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Ones(2, 2),
                                             Eigen::VectorXd::Constant(2, -inf), Eigen::VectorXd::Constant(2, 1.0)),
                                      qmc_only());
    CHECK(degenerate.rank_used == 1);
    CHECK(std::fabs(degenerate.value - normal_cdf(1.0)) <= 3 * degenerate.std_error + 1e-12);

    auto one = box_probability(region(Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Identity(1, 1),
                                      Eigen::VectorXd::Constant(1, -inf), Eigen::VectorXd::Constant(1, 3.162)),
                               qmc_only());
    CHECK(one.value == doctest::Approx(0.8774).epsilon(1e-3));
    CHECK(one.std_error == 0.0);
}

TEST_CASE("diagonal covariance factorizes") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5), s(0.3, 2.0);
    for (int d = 2; d <= 8; ++d) {
        Eigen::VectorXd mean(d), lo(d), hi(d);
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
        double product = 1.0;
        for (int i = 0; i < d; ++i) {
            mean[i] = u(rng);
            double sd = s(rng);
            cov(i, i) = sd * sd;
            lo[i] = i % 3 == 0 ? -inf : u(rng) - 1.5;
            hi[i] = u(rng) + 1.5;
            product *= normal_cdf((hi[i] - mean[i]) / sd) - normal_cdf((lo[i] - mean[i]) / sd);
        }
        auto est = box_probability(region(mean, cov, lo, hi), qmc_only());
        CHECK(std::fabs(est.value - product) <= 3 * est.std_error + 1e-9);
        auto exact = box_probability(region(mean, cov, lo, hi), QmcConfig{});
        CHECK(exact.value == doctest::Approx(product).epsilon(1e-12));
    }
}

TEST_CASE("degenerate covariance agrees with plain Monte Carlo") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    Eigen::MatrixXd B(4, 2);
    B << 1.0, 0.2, 0.5, -0.7, -0.3, 0.9, 0.8, 0.8;
    Eigen::VectorXd mean(4), hi(4), lo = Eigen::VectorXd::Constant(4, -1.2);
    mean << 0.1, -0.2, 0.3, 0.0;
    hi << 1.0, 0.9, 1.4, 1.6;
    auto est = box_probability(region(mean, B * B.transpose(), lo, hi), qmc_only());
    CHECK(est.rank_used == 2);
    const int draws = 1000000;
    long hits = 0;
    for (int r = 0; r < draws; ++r) {
        Eigen::Vector2d e(z(rng), z(rng));
        Eigen::VectorXd x = mean + B * e;
        hits += ((x.array() >= lo.array()) && (x.array() <= hi.array())).all();
    }
    const double mc = static_cast<double>(hits) / draws;
    const double mc_se = std::sqrt(mc * (1 - mc) / draws);
    CHECK(std::fabs(est.value - mc) <= 3 * std::sqrt(mc_se * mc_se + est.std_error * est.std_error));
}

TEST_CASE("monotone in the box, deterministic, error shrinks with randomizations") {
    Eigen::MatrixXd cov(3, 3);
    cov << 1.0, 0.4, -0.2, 0.4, 1.0, 0.3, -0.2, 0.3, 1.0;
    Eigen::VectorXd mean(3);
    mean << 0.2, -0.1, 0.4;
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(3, -0.8), hi = Eigen::VectorXd::Constant(3, 0.9);
    auto small = box_probability(region(mean, cov, lo, hi), qmc_only());
    Eigen::VectorXd hi2 = hi;
    hi2[1] += 0.5;
    auto large = box_probability(region(mean, cov, lo, hi2), qmc_only());
    CHECK(large.value >= small.value - 3 * std::hypot(small.std_error, large.std_error));

    auto again = box_probability(region(mean, cov, lo, hi), qmc_only());
    CHECK(again.value == small.value);
    CHECK(again.std_error == small.std_error);

    auto eight = box_probability(region(mean, cov, lo, hi), qmc_only(1024, 8, 3));
    auto many = box_probability(region(mean, cov, lo, hi), qmc_only(1024, 32, 3));
    const double ratio = eight.std_error / many.std_error;
    CHECK(ratio > 1.0);  // sqrt(32/8) = 2 expected
    CHECK(ratio < 4.0);
}

TEST_CASE("equicorrelated quadrature matches the general path") {
    const double rho = 0.35;
    Eigen::MatrixXd cov = (1 - rho) * Eigen::MatrixXd::Identity(5, 5) + rho * Eigen::MatrixXd::Ones(5, 5);
    Eigen::VectorXd mean = Eigen::VectorXd::Constant(5, 0.3);
    auto r = region(mean, cov, Eigen::VectorXd::Constant(5, -1.0), Eigen::VectorXd::Constant(5, 1.5));
    auto quad = equicorrelated_probability(r);
    REQUIRE(quad.has_value());
    auto qmc = box_probability(r, qmc_only(8192));
    CHECK(std::fabs(quad->value - qmc.value) <= 3 * qmc.std_error + 1e-9);

    Eigen::MatrixXd mild = 1.02 * Eigen::MatrixXd::Identity(6, 6) - 0.02 * Eigen::MatrixXd::Ones(6, 6);
    Eigen::VectorXd shifted(6);
    shifted << 0.1, -0.2, 0.3, 0.0, 0.5, -0.4;
    auto rm = region(shifted, mild, Eigen::VectorXd::Constant(6, -1.1), Eigen::VectorXd::Constant(6, 0.9));
    auto quad_neg = equicorrelated_probability(rm);
    REQUIRE(quad_neg.has_value());
    CHECK(quad_neg->std_error == 0.0);
    auto qmc_neg = box_probability(rm, qmc_only(16384));
    CHECK(std::fabs(quad_neg->value - qmc_neg.value) <= 3 * qmc_neg.std_error + 1e-9);

    // continuous through zero correlation
    auto at = [&](double rho) {
        Eigen::MatrixXd c = (1 - rho) * Eigen::MatrixXd::Identity(4, 4) + rho * Eigen::MatrixXd::Ones(4, 4);
        return equicorrelated_probability(region(Eigen::VectorXd::Constant(4, 0.2), c, Eigen::VectorXd::Constant(4, -1.0),
                                                 Eigen::VectorXd::Constant(4, 1.2)))
            ->value;
    };
    CHECK(std::fabs(at(-1e-9) - at(1e-9)) < 1e-10);
    const double indep = std::pow(normal_cdf(1.0) - normal_cdf(-1.2), 4);
    CHECK(std::fabs(at(-1e-9) - indep) < 1e-10);

    Eigen::MatrixXd neg = 1.2 * Eigen::MatrixXd::Identity(3, 3) - 0.2 * Eigen::MatrixXd::Ones(3, 3);
    CHECK_FALSE(equicorrelated_probability(region(Eigen::VectorXd::Zero(3), neg, Eigen::VectorXd::Constant(3, -1.0),
                                                  Eigen::VectorXd::Constant(3, 1.0)))
                    .has_value());
}

TEST_CASE("threshold curve follows pointwise box probabilities") {
    AffineBoxFamily fam;
    fam.mean_offset = Eigen::VectorXd::Zero(3);
    fam.mean_slope = Eigen::Vector3d(0.2, -0.1, 0.3);
    Eigen::MatrixXd cov(3, 3);
    cov << 1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0;
    fam.covariance = cov;
    fam.lower_offset = Eigen::VectorXd::Zero(3);
    fam.lower_slope = Eigen::VectorXd::Constant(3, -1.0);
    fam.upper_offset = Eigen::VectorXd::Zero(3);
    fam.upper_slope = Eigen::VectorXd::Constant(3, 1.0);
    auto curve = ThresholdCurve::sample(fam, qmc_only());
    for (double t : {0.0, 0.3, 1.0, 2.0, 4.0}) {
        auto direct = box_probability(fam.at(t), qmc_only(4096, 8, 99));
        auto c = curve.at(t);
        CHECK(std::fabs(c.value - direct.value) <= 3 * std::hypot(c.std_error, direct.std_error) + 1e-9);
    }
    CHECK(curve.at(0.0).value == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ThresholdCurve::constant(1.0).at(3.0).value == 1.0);
}

TEST_CASE("region and config validation") {
    QmcConfig q;
    q.sample_budget = 16;
    CHECK_THROWS_AS(q.validate(), Error);
    auto r = region(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(2),
                    Eigen::VectorXd::Ones(2));
    CHECK_THROWS_AS(box_probability(r, QmcConfig{}), Error);
}
