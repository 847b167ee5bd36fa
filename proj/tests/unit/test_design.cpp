#include "doctest.h"
#include "fixtures.hpp"
#include "ssdlasso/errors.hpp"

using namespace ssdlasso;

namespace {

Design two_run() {
    IntMatrix x(2, 2);
    x << 1, 1, 1, -1;
    return Design(x);
}

// Raw S = LᵀL sums computed the slow way.
std::pair<double, double> raw_sums(const Design& d) {
    IntMatrix L(d.runs(), d.factors() + 1);
    L.col(0).setOnes();
    L.rightCols(d.factors()) = d.matrix();
    IntMatrix S = L.transpose() * L;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < S.rows(); ++i)
        for (int j = i + 1; j < S.cols(); ++j) {
            s1 += S(i, j);
            s2 += static_cast<double>(S(i, j)) * S(i, j);
        }
    return {s1, s2};
}

}  // namespace

TEST_CASE("design entries and csv round trip") {
    IntMatrix bad(2, 2);
    bad << 1, 0, 1, -1;
    CHECK_THROWS_AS(Design{bad}, Error);
    Design d = fixtures::random_design(7, 5, 3);
    CHECK(Design::parse_csv(d.to_csv()) == d);
    CHECK_THROWS_AS(Design::parse_csv("1,-1\n1,2\n"), Error);
    CHECK_THROWS_AS(Design::parse_csv("1,-1\n1\n"), Error);
    CHECK_THROWS_AS(Design::parse_csv("+1,-1\n1,1\n"), Error);
}

TEST_CASE("standardize an orthogonal design") {
    auto sd = standardize(fixtures::hadamard_design(4, 3));
    CHECK((sd.C - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    CHECK((sd.V - Eigen::VectorXd::Ones(3)).norm() < 1e-12);
    CHECK(sd.degenerate_columns.empty());
}

TEST_CASE("standardize flags constant columns") {
    auto sd = standardize(two_run());
    REQUIRE(sd.degenerate_columns.size() == 1);
    CHECK(sd.degenerate_columns[0] == 0);
    CHECK(sd.V[0] == 0.0);
    CHECK(sd.F.col(0).norm() == 0.0);
    CHECK(sd.C(0, 0) == 0.0);
    CHECK(sd.C(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("standardized invariants on random designs") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto d = fixtures::random_design(9, 12, seed);
        auto sd = standardize(d);
        CHECK((sd.F.transpose() * sd.F / 9.0 - sd.C).cwiseAbs().maxCoeff() < 1e-12);
        for (int j = 0; j < 12; ++j) {
            CHECK(std::fabs(sd.F.col(j).sum()) < 1e-10);
            CHECK(sd.V[j] >= 0.0);
            CHECK(sd.V[j] <= 1.0);
            if (!sd.is_degenerate(j)) CHECK(sd.C(j, j) == doctest::Approx(1.0).epsilon(1e-10));
            // V_j = 1 - mean_j^2
            const double m = d.matrix().col(j).cast<double>().mean();
            CHECK(sd.V[j] == doctest::Approx(1.0 - m * m));
        }
    }
}

TEST_CASE("heuristics examples") {
    auto h = heuristics(fixtures::hadamard_design(4, 3));
    CHECK(h.ue_s2 == 0.0);
    CHECK(h.ue_s == 0.0);
    CHECK(h.var_s == 0.0);
    REQUIRE(h.e_s2.has_value());
    CHECK(*h.e_s2 == 0.0);

    auto t = heuristics(two_run());
    CHECK(t.ue_s2 == doctest::Approx(4.0 / 3.0));
    CHECK(t.ue_s == doctest::Approx(2.0 / 3.0));
    CHECK(t.var_s == doctest::Approx(8.0 / 9.0));
    CHECK_FALSE(t.e_s2.has_value());

    IntMatrix x = fixtures::random_design(6, 3, 9).matrix();
    x.col(2) = x.col(1);
    auto dup = heuristics(Design(x));
    auto [s1, s2] = raw_sums(Design(x));
    CHECK(dup.sum_s2 == doctest::Approx(s2));
    CHECK(dup.sum_s2 >= 36.0);
}

TEST_CASE("heuristics agree with brute force and are permutation invariant") {
    for (std::uint64_t seed = 20; seed < 30; ++seed) {
        auto d = fixtures::random_design(10, 12, seed);
        auto h = heuristics(d);
        auto [s1, s2] = raw_sums(d);
        const double pairs = 13.0 * 12.0 / 2.0;
        CHECK(h.pairs == 78);
        CHECK(h.ue_s2 == doctest::Approx(s2 / pairs));
        CHECK(h.ue_s == doctest::Approx(s1 / pairs));
        CHECK(h.var_s == doctest::Approx(s2 / pairs - (s1 / pairs) * (s1 / pairs)));
        std::vector<int> order{11, 3, 5, 0, 1, 2, 4, 6, 7, 8, 9, 10};
        auto hp = heuristics(d.with_columns(order));
        CHECK(hp.ue_s2 == doctest::Approx(h.ue_s2));
        CHECK(hp.var_s == doctest::Approx(h.var_s));
        std::vector<int> flip(12, 1);
        flip[4] = -1;
        CHECK(heuristics(d.with_column_signs(flip)).ue_s2 == doctest::Approx(h.ue_s2));
    }
}

TEST_CASE("Hadamard subsets are orthogonal and balanced") {
    for (int p = 1; p <= 15; ++p) {
        auto h = heuristics(fixtures::hadamard_design(16, p));
        CHECK(h.ue_s2 == 0.0);
        CHECK(h.var_s == 0.0);
    }
}

TEST_CASE("ue2 efficiency") {
    auto d = fixtures::random_design(9, 10, 4);
    auto h = heuristics(d);
    CHECK(ue2_efficiency(d, h.ue_s2) == doctest::Approx(1.0));
    CHECK(ue2_efficiency(d, h.ue_s2 / 2) == doctest::Approx(0.5));
    auto orth = fixtures::hadamard_design(4, 3);
    CHECK(ue2_efficiency(orth, 0.0) == 1.0);
    CHECK_THROWS_AS(ue2_efficiency(orth, 1.0), Error);
}

TEST_CASE("submatrix views") {
    auto sd = standardize(fixtures::hadamard_design(4, 3));
    auto b = submatrix_views(sd, std::vector<int>{0, 1});
    CHECK((b.C_A - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
    CHECK(b.C_IA.norm() < 1e-12);
    auto all = submatrix_views(sd, std::vector<int>{0, 1, 2});
    CHECK(all.C_I.size() == 0);
    CHECK(all.C_IA.size() == 0);
    CHECK(all.inactive.empty());

    IntMatrix x = fixtures::random_design(8, 4, 2).matrix();
    x.col(3) = x.col(0);
    auto dup = standardize(Design(x));
    CHECK_THROWS_AS(submatrix_views(dup, std::vector<int>{0, 3}), Error);
    try {
        submatrix_views(dup, std::vector<int>{0, 3});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularCA);
    }
    try {
        submatrix_views(standardize(two_run()), std::vector<int>{0});
        FAIL("expected DegenerateSupport");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateSupport);
    }
}
