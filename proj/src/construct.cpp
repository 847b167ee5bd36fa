#include "ssdlasso/construct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "ssdlasso/errors.hpp"
#include "ssdlasso/parallel.hpp"
#include "ssdlasso/qmc.hpp"

namespace ssdlasso {

namespace {

// L = (1 | X) with S = LᵀL maintained under single-cell flips.
class FlipState {
public:
    FlipState(int n, int p, Rng& rng) : n_(n), p_(p), L_(n, p + 1) {
        std::bernoulli_distribution coin(0.5);
        L_.col(0).setOnes();
        for (int i = 0; i < n; ++i)
            for (int j = 1; j <= p; ++j) L_(i, j) = coin(rng) ? 1 : -1;
        recompute();
    }

    void recompute() {
        S_ = L_.transpose() * L_;
        sum_s_ = sum_s2_ = 0;
        for (int a = 0; a <= p_; ++a)
            for (int b = a + 1; b <= p_; ++b) {
                sum_s_ += S_(a, b);
                sum_s2_ += static_cast<long long>(S_(a, b)) * S_(a, b);
            }
    }

    // Changes of (sum s, sum s^2) if cell (row i, factor j) were flipped; j is 0-based.
    std::pair<long long, long long> delta(int i, int j) const {
        const int col = j + 1;
        const int x = L_(i, col);
        long long d1 = 0, d2 = 0;
        for (int m = 0; m <= p_; ++m) {
            if (m == col) continue;
            const int prod = x * L_(i, m);
            d1 += -2 * prod;
            d2 += -4LL * S_(col, m) * prod + 4;
        }
        return {d1, d2};
    }

    void flip(int i, int j) {
        const int col = j + 1;
        const int x = L_(i, col);
        for (int m = 0; m <= p_; ++m) {
            if (m == col) continue;
            const int change = -2 * x * L_(i, m);
            S_(col, m) += change;
            S_(m, col) += change;
        }
        L_(i, col) = -x;
    }

    void apply(int i, int j, long long d1, long long d2) {
        flip(i, j);
        sum_s_ += d1;
        sum_s2_ += d2;
    }

    long long sum_s() const { return sum_s_; }
    long long sum_s2() const { return sum_s2_; }
    int n() const { return n_; }
    int p() const { return p_; }

    Design design() const { return Design(L_.rightCols(p_)); }

private:
    int n_, p_;
    IntMatrix L_;
    IntMatrix S_;
    long long sum_s_ = 0, sum_s2_ = 0;
};

struct Objective {
    long long pairs;
    double ue2_cap = std::numeric_limits<double>::infinity();  // max allowed mean s^2
    std::optional<double> ue_s_floor;

    double mean_s2(long long s2) const { return static_cast<double>(s2) / pairs; }
    double mean_s(long long s1) const { return static_cast<double>(s1) / pairs; }
    // Var(s) * pairs^2, exact in integers
    long long scaled_var(long long s1, long long s2) const { return s2 * pairs - s1 * s1; }

    double violation(long long s1, long long s2) const {
        double v = 0.0;
        if (std::isfinite(ue2_cap)) v += std::max(0.0, mean_s2(s2) - ue2_cap * (1.0 + 1e-12)) / ue2_cap;
        if (ue_s_floor && !(mean_s(s1) > *ue_s_floor)) v += *ue_s_floor - mean_s(s1) + 2.0 / pairs;
        return v;
    }
};

ExchangeResult finish(const FlipState& st, std::vector<double> trace, int start) {
    Design d = st.design();
    HeuristicSummary h = heuristics(d);
    return {std::move(d), h, std::move(trace), start};
}

ExchangeResult ue2_start(int n, int p, const ExchangeConfig& cfg, int start) {
    Rng rng(derive_seed(cfg.seed, {0x7565ULL, static_cast<std::uint64_t>(start)}));
    FlipState st(n, p, rng);
    const long long pairs = binomial(p + 1, 2);
    std::vector<double> trace{static_cast<double>(st.sum_s2()) / pairs};
    for (int pass = 0; pass < cfg.max_passes; ++pass) {
        bool improved = false;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) {
                auto [d1, d2] = st.delta(i, j);
                if (d2 < 0) {
                    st.apply(i, j, d1, d2);
                    trace.push_back(static_cast<double>(st.sum_s2()) / pairs);
                    improved = true;
                }
            }
        if (!improved) break;
    }
    return finish(st, std::move(trace), start);
}

std::optional<ExchangeResult> var_start(int n, int p, const ExchangeConfig& cfg, const Objective& obj, int start) {
    Rng rng(derive_seed(cfg.seed, {0x7673ULL, static_cast<std::uint64_t>(start)}));
    FlipState st(n, p, rng);
    int passes = 0;
    // repair: drive the constraint violation to zero
    double viol = obj.violation(st.sum_s(), st.sum_s2());
    while (viol > 0.0 && passes < cfg.max_passes) {
        ++passes;
        bool improved = false;
        for (int i = 0; i < n && viol > 0.0; ++i)
            for (int j = 0; j < p && viol > 0.0; ++j) {
                auto [d1, d2] = st.delta(i, j);
                double v = obj.violation(st.sum_s() + d1, st.sum_s2() + d2);
                if (v < viol) {
                    st.apply(i, j, d1, d2);
                    viol = v;
                    improved = true;
                }
            }
        if (!improved) break;
    }
    if (viol > 0.0) return std::nullopt;
    // descend on Var(s) while staying feasible
    std::vector<double> trace{static_cast<double>(obj.scaled_var(st.sum_s(), st.sum_s2())) /
                              (static_cast<double>(obj.pairs) * obj.pairs)};
    for (; passes < cfg.max_passes; ++passes) {
        bool improved = false;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) {
                auto [d1, d2] = st.delta(i, j);
                long long cur = obj.scaled_var(st.sum_s(), st.sum_s2());
                long long next = obj.scaled_var(st.sum_s() + d1, st.sum_s2() + d2);
                if (next < cur && obj.violation(st.sum_s() + d1, st.sum_s2() + d2) == 0.0) {
                    st.apply(i, j, d1, d2);
                    trace.push_back(static_cast<double>(next) / (static_cast<double>(obj.pairs) * obj.pairs));
                    improved = true;
                }
            }
        if (!improved) break;
    }
    return finish(st, std::move(trace), start);
}

void check_size(int n, int p, const ExchangeConfig& cfg) {
    require(n >= 2 && p >= 1, ErrorKind::InvalidArgument, "need n >= 2 and p >= 1");
    require(cfg.starts >= 1 && cfg.max_passes >= 1, ErrorKind::InvalidArgument, "starts and max_passes must be >= 1");
}

}  // namespace

ExchangeResult exchange_ue2(int n, int p, const ExchangeConfig& cfg) {
    check_size(n, p, cfg);
    auto runs = parallel_map(static_cast<std::size_t>(cfg.starts),
                             [&](std::size_t s) { return ue2_start(n, p, cfg, static_cast<int>(s)); });
    std::size_t best = 0;
    for (std::size_t s = 1; s < runs.size(); ++s)
        if (runs[s].summary.sum_s2 < runs[best].summary.sum_s2) best = s;
    return std::move(runs[best]);
}

ExchangeResult exchange_var_s_plus(int n, int p, const ExchangeConfig& cfg) {
    check_size(n, p, cfg);
    Objective obj{binomial(p + 1, 2)};
    if (cfg.ue2_efficiency_floor) {
        const double floor = *cfg.ue2_efficiency_floor;
        require(floor > 0.0 && floor <= 1.0, ErrorKind::InvalidArgument, "efficiency floor must lie in (0,1]");
        double reference = cfg.ue2_reference ? *cfg.ue2_reference : exchange_ue2(n, p, cfg).summary.ue_s2;
        require(reference >= 0.0, ErrorKind::InvalidArgument, "UE(s^2) reference must be nonnegative");
        obj.ue2_cap = reference / floor;
    }
    obj.ue_s_floor = cfg.ue_s_floor;
    auto runs = parallel_map(static_cast<std::size_t>(cfg.starts),
                             [&](std::size_t s) { return var_start(n, p, cfg, obj, static_cast<int>(s)); });
    std::optional<std::size_t> best;
    for (std::size_t s = 0; s < runs.size(); ++s) {
        if (!runs[s]) continue;
        if (!best || runs[s]->summary.var_s < runs[*best]->summary.var_s) best = s;
    }
    require(best.has_value(), ErrorKind::InfeasibleConstraints, "no start satisfied the UE(s^2)/UE(s) floors");
    ExchangeResult out = std::move(*runs[*best]);
    if (cfg.ue2_efficiency_floor && out.summary.ue_s2 > 0.0)
        out.summary.ue2_efficiency = (obj.ue2_cap * *cfg.ue2_efficiency_floor) / out.summary.ue_s2;
    return out;
}

Design block_construction(int n, int k, int k1) {
    require(n % 2 == 0, ErrorKind::OddN, "block construction needs an even run size");
    require(n >= 6, ErrorKind::InvalidArgument, "block construction needs n >= 6");
    const int h = n / 2, k2 = k - k1;
    require(k >= 1 && k <= n - 1 && k1 >= 0 && k2 >= 0 && k1 <= h && k2 <= h, ErrorKind::ColumnBudget,
            "need k <= n-1 and both block counts <= n/2");
    IntMatrix x(n, k);
    for (int a = 0; a < k1; ++a)
        for (int i = 0; i < n; ++i) x(i, a) = i < h ? (i == a ? 1 : -1) : 1;
    for (int b = 0; b < k2; ++b)
        for (int i = 0; i < n; ++i) x(i, k1 + b) = i < h ? -1 : (i - h == b ? -1 : 1);
    Design d(std::move(x));
    const double v = 1.0 - 4.0 / (static_cast<double>(n) * n);
    StandardizedDesign sd = standardize(d);
    for (int j = 0; j < k; ++j)
        require(std::fabs(sd.V[j] - v) < 1e-12, ErrorKind::InvalidArgument, "block column has unexpected variance");
    return d;
}

std::pair<double, double> xi_values(int n, int k1, int k2) {
    require(n % 2 == 0, ErrorKind::OddN, "block construction needs an even run size");
    require(k1 >= 0 && k2 >= 0 && k1 + k2 >= 1 && k1 <= n / 2 && k2 <= n / 2, ErrorKind::ColumnBudget,
            "block counts out of range");
    const double nn = n, kt1 = n - 2.0 * k1, kt2 = n - 2.0 * k2;
    const double denom = (nn - 2) * (nn - 2) * (k1 * kt2 + kt1 * k2) + 4.0 * kt1 * kt2;
    require(denom != 0.0, ErrorKind::InvalidArgument, "active block is singular");
    return {kt2 * (nn * nn - 4) / denom, kt1 * (nn * nn - 4) / denom};
}

SignBoundRatio sign_bound_ratio(double xi, double v) {
    require(v > 0.0 && v < 1.0, ErrorKind::InvalidArgument, "scaling entry must lie in (0,1)");
    return {(1.0 - xi) / (1.0 - v), (1.0 - xi) / (1.0 - std::sqrt(v))};
}

Design pad_with_constant_columns(const Design& active, int p) {
    require(p >= active.factors(), ErrorKind::InvalidArgument, "p must be at least the active column count");
    IntMatrix x = IntMatrix::Ones(active.runs(), p);
    x.leftCols(active.factors()) = active.matrix();
    return Design(std::move(x));
}

SupportBalance support_balance(const SupportSet& set, int p) {
    std::vector<int> fac(p, 0);
    std::vector<int> pair(static_cast<std::size_t>(p) * p, 0);
    for (const auto& s : set.supports)
        for (std::size_t a = 0; a < s.size(); ++a) {
            ++fac[s[a]];
            for (std::size_t b = a + 1; b < s.size(); ++b) {
                int lo = std::min(s[a], s[b]), hi = std::max(s[a], s[b]);
                ++pair[static_cast<std::size_t>(lo) * p + hi];
            }
        }
    SupportBalance out;
    auto [fmin, fmax] = std::minmax_element(fac.begin(), fac.end());
    out.factor_spread = *fmax - *fmin;
    int pmin = std::numeric_limits<int>::max(), pmax = 0;
    for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b) {
            pmin = std::min(pmin, pair[static_cast<std::size_t>(a) * p + b]);
            pmax = std::max(pmax, pair[static_cast<std::size_t>(a) * p + b]);
        }
    out.pair_spread = p >= 2 ? pmax - pmin : 0;
    return out;
}

SupportSet nbibd_supports(int p, int k, int blocks, std::uint64_t seed) {
    require(k >= 1 && k < p, ErrorKind::InvalidArgument, "need 1 <= k < p");
    require(blocks >= 1, ErrorKind::InvalidArgument, "need at least one block");
    const long total = binomial(p, k);
    require(blocks <= total, ErrorKind::TooManyBlocks, "more blocks than distinct supports");
    if (blocks == total) {
        SupportSet all = SupportSet::exhaustive(p, k);
        all.mode = SupportSet::Mode::Nbibd;
        return all;
    }
    Rng rng(derive_seed(seed, {0x6e626962ULL}));

    // Stage 1: each block takes the k least-used factors (random ties), so
    // factor counts never differ by more than one.
    std::vector<int> fac(p, 0);
    std::vector<Support> sets(blocks);
    for (auto& blk : sets) {
        std::vector<int> order(p);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fac[a] < fac[b]; });
        blk.assign(order.begin(), order.begin() + k);
        std::sort(blk.begin(), blk.end());
        for (int j : blk) ++fac[j];
    }

    // Stage 2: swap a factor between two blocks (factor counts unchanged) while
    // the pair-count cost does not increase. Duplicated blocks carry a large penalty.
    auto pidx = [p](int a, int b) { return static_cast<std::size_t>(std::min(a, b)) * p + std::max(a, b); };
    std::vector<int> pair(static_cast<std::size_t>(p) * p, 0);
    for (const auto& blk : sets)
        for (int a = 0; a < k; ++a)
            for (int b = a + 1; b < k; ++b) ++pair[pidx(blk[a], blk[b])];
    const double mean = static_cast<double>(blocks) * k * (k - 1) / (static_cast<double>(p) * (p - 1));
    auto cost = [mean](int c) {
        const double d = c - mean;
        return d * d * d * d;
    };
    std::map<Support, int> copies;
    for (const auto& blk : sets) ++copies[blk];
    long duplicates = 0;
    for (const auto& [blk, m] : copies) duplicates += m - 1;
    constexpr double kDuplicatePenalty = 1e12;

    auto spread = [&] {
        int lo = std::numeric_limits<int>::max(), hi = 0;
        for (int a = 0; a < p; ++a)
            for (int b = a + 1; b < p; ++b) {
                lo = std::min(lo, pair[pidx(a, b)]);
                hi = std::max(hi, pair[pidx(a, b)]);
            }
        return hi - lo;
    };
    if (k >= 2 && blocks >= 2) {
        std::uniform_int_distribution<int> pick_block(0, blocks - 1), pick_slot(0, k - 1);
        const long max_moves = std::max(200000L, 400L * blocks * k);
        std::vector<std::pair<std::size_t, int>> changes;
        for (long move = 0; move < max_moves; ++move) {
            if (move % 2000 == 0 && duplicates == 0 && spread() <= 1) break;
            const int b1 = pick_block(rng), b2 = pick_block(rng);
            if (b1 == b2) continue;
            const int x = sets[b1][pick_slot(rng)], y = sets[b2][pick_slot(rng)];
            if (std::binary_search(sets[b1].begin(), sets[b1].end(), y) ||
                std::binary_search(sets[b2].begin(), sets[b2].end(), x))
                continue;
            Support n1 = sets[b1], n2 = sets[b2];
            *std::find(n1.begin(), n1.end(), x) = y;
            *std::find(n2.begin(), n2.end(), y) = x;
            std::sort(n1.begin(), n1.end());
            std::sort(n2.begin(), n2.end());

            changes.clear();
            for (int u : sets[b1])
                if (u != x) {
                    changes.emplace_back(pidx(x, u), -1);
                    changes.emplace_back(pidx(y, u), +1);
                }
            for (int v : sets[b2])
                if (v != y) {
                    changes.emplace_back(pidx(y, v), -1);
                    changes.emplace_back(pidx(x, v), +1);
                }
            std::sort(changes.begin(), changes.end());
            double delta = 0.0;
            for (std::size_t i = 0; i < changes.size();) {
                std::size_t j = i;
                int net = 0;
                while (j < changes.size() && changes[j].first == changes[i].first) net += changes[j++].second;
                if (net != 0) delta += cost(pair[changes[i].first] + net) - cost(pair[changes[i].first]);
                i = j;
            }
            // duplicates among the (at most four) keys this move touches
            std::map<Support, int> touched;
            for (const Support* key : {&sets[b1], &sets[b2], &n1, &n2}) {
                auto it = copies.find(*key);
                touched[*key] = it == copies.end() ? 0 : it->second;
            }
            long dup_before = 0, dup_after = 0;
            for (const auto& [key, m] : touched) dup_before += std::max(0, m - 1);
            --touched[sets[b1]];
            --touched[sets[b2]];
            ++touched[n1];
            ++touched[n2];
            for (const auto& [key, m] : touched) dup_after += std::max(0, m - 1);
            delta += kDuplicatePenalty * static_cast<double>(dup_after - dup_before);
            if (delta > 1e-9) continue;

            for (std::size_t i = 0; i < changes.size(); ++i) pair[changes[i].first] += changes[i].second;
            if (--copies[sets[b1]] == 0) copies.erase(sets[b1]);
            if (--copies[sets[b2]] == 0) copies.erase(sets[b2]);
            ++copies[n1];
            ++copies[n2];
            sets[b1] = std::move(n1);
            sets[b2] = std::move(n2);
            duplicates += dup_after - dup_before;
        }
    }
    require(duplicates == 0, ErrorKind::TooManyBlocks, "could not find enough distinct balanced supports");
    SupportSet out;
    out.mode = SupportSet::Mode::Nbibd;
    out.supports = std::move(sets);
    return out;
}

// ---------------------------------------------------------------------------

void HilsConfig::validate() const {
    require(n >= 2 && p >= 1 && k >= 1 && k <= p, ErrorKind::InvalidArgument, "need n >= 2 and 1 <= k <= p");
    require(beta > 0.0, ErrorKind::InvalidArgument, "beta must be positive");
    require(m_v >= 0 && m_u >= 0 && m_v_star >= 0 && m_u_star >= 0 && m_v_star <= m_v && m_u_star <= m_u,
            ErrorKind::InvalidArgument, "retained counts must satisfy 0 <= m* <= m");
    require(m_v == 0 || !efficiency_floors.empty(), ErrorKind::InvalidArgument, "need efficiency floors");
    require(m_v == 0 || !ue_s_floors.empty(), ErrorKind::InvalidArgument, "need UE(s) floors");
    require(summary != HilsSummary::Fixed || lambda > 0.0, ErrorKind::InvalidArgument, "lambda must be positive");
    qmc.validate();
}

namespace {

SupportSet hils_supports(const HilsConfig& cfg) {
    if (!cfg.explicit_supports.empty()) return SupportSet::from_list(cfg.explicit_supports);
    if (cfg.nbibd_blocks > 0) return nbibd_supports(cfg.p, cfg.k, cfg.nbibd_blocks, cfg.seed);
    return SupportSet::exhaustive(cfg.p, cfg.k);
}

SignVectorSet hils_signs(const HilsConfig& cfg) {
    return cfg.sign_mode == SignMode::Known ? SignVectorSet::known() : SignVectorSet::all_half();
}

double pick_score(const HilsCandidate& c, HilsSummary s) {
    switch (s) {
        case HilsSummary::Fixed: return c.fixed_value.value;
        case HilsSummary::Max: return c.max_value.value;
        case HilsSummary::Integral: return c.integral_value.value;
    }
    return 0.0;
}

}  // namespace

HilsCandidate score_design(const Design& design, const HilsConfig& cfg, const SupportSet& supports) {
    HilsCandidate c{design, "", heuristics(design)};
    StandardizedDesign sd = standardize(design);
    CriterionCurve curve(sd, cfg.k, cfg.beta, supports, hils_signs(cfg), cfg.qmc);
    c.max_value = maximize_over_log_lambda(curve.evaluator(), cfg.max_search);
    c.integral_value = integrate_over_log_lambda(curve.evaluator(), cfg.integral);
    c.fixed_value = curve.at_lambda(cfg.lambda);
    c.score = pick_score(c, cfg.summary);
    return c;
}

HilsReport hils(const HilsConfig& cfg) {
    cfg.validate();
    HilsReport report{Design(IntMatrix::Ones(std::max(cfg.n, 2), std::max(cfg.p, 1)))};
    const SupportSet supports = hils_supports(cfg);
    supports.validate(cfg.p, cfg.k);

    std::vector<HilsCandidate> pool;
    if (cfg.m_v > 0 || cfg.m_u > 0) {
        ExchangeConfig ref_cfg;
        ref_cfg.starts = cfg.reference_starts;
        ref_cfg.max_passes = cfg.max_passes;
        ref_cfg.seed = derive_seed(cfg.seed, {0x726566ULL});
        report.ue2_reference = cfg.ue2_reference ? *cfg.ue2_reference : exchange_ue2(cfg.n, cfg.p, ref_cfg).summary.ue_s2;
    }

    // Step 1: Var(s+) pool with sampled floors
    {
        auto runs = parallel_map(static_cast<std::size_t>(cfg.m_v), [&](std::size_t i) -> std::optional<HilsCandidate> {
            Rng rng(derive_seed(cfg.seed, {0x666c6f6fULL, i}));
            std::uniform_int_distribution<std::size_t> pick_eff(0, cfg.efficiency_floors.size() - 1);
            std::uniform_int_distribution<std::size_t> pick_ues(0, cfg.ue_s_floors.size() - 1);
            ExchangeConfig ec;
            ec.starts = cfg.exchange_starts;
            ec.max_passes = cfg.max_passes;
            ec.seed = derive_seed(cfg.seed, {0x767370ULL, i});
            ec.ue2_efficiency_floor = cfg.efficiency_floors[pick_eff(rng)];
            ec.ue_s_floor = cfg.ue_s_floors[pick_ues(rng)];
            ec.ue2_reference = report.ue2_reference;
            try {
                ExchangeResult r = exchange_var_s_plus(cfg.n, cfg.p, ec);
                HilsCandidate c{std::move(r.design), "var_s_plus", r.summary};
                c.efficiency_floor = *ec.ue2_efficiency_floor;
                c.ue_s_floor = *ec.ue_s_floor;
                c.heuristics.ue2_efficiency = report.ue2_reference / c.heuristics.ue_s2;
                return c;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::InfeasibleConstraints) throw;
                return std::nullopt;
            }
        });
        std::vector<HilsCandidate> vs;
        for (auto& r : runs)
            if (r) vs.push_back(std::move(*r));
        if (cfg.prescreen == PrescreenRule::Heuristic) {
            std::stable_sort(vs.begin(), vs.end(), [](const HilsCandidate& a, const HilsCandidate& b) {
                return a.heuristics.var_s < b.heuristics.var_s;
            });
            if (static_cast<int>(vs.size()) > cfg.m_v_star) vs.erase(vs.begin() + cfg.m_v_star, vs.end());
        }
        for (auto& c : vs) pool.push_back(std::move(c));
    }
    // Step 2: UE(s^2) pool
    {
        auto runs = parallel_map(static_cast<std::size_t>(cfg.m_u), [&](std::size_t i) {
            ExchangeConfig ec;
            ec.starts = cfg.exchange_starts;
            ec.max_passes = cfg.max_passes;
            ec.seed = derive_seed(cfg.seed, {0x756532ULL, i});
            ExchangeResult r = exchange_ue2(cfg.n, cfg.p, ec);
            HilsCandidate c{std::move(r.design), "ue2", r.summary};
            if (c.heuristics.ue_s2 > 0.0) c.heuristics.ue2_efficiency = report.ue2_reference / c.heuristics.ue_s2;
            return c;
        });
        if (cfg.prescreen == PrescreenRule::Heuristic) {
            std::stable_sort(runs.begin(), runs.end(), [](const HilsCandidate& a, const HilsCandidate& b) {
                return a.heuristics.ue_s2 < b.heuristics.ue_s2;
            });
            if (static_cast<int>(runs.size()) > cfg.m_u_star) runs.erase(runs.begin() + cfg.m_u_star, runs.end());
        }
        for (auto& c : runs) pool.push_back(std::move(c));
    }
    // Step 3: extra designs
    for (const auto& [label, d] : cfg.extra_designs) {
        require(d.runs() == cfg.n && d.factors() == cfg.p, ErrorKind::DimensionMismatch,
                "extra design " + label + " has the wrong size");
        HilsCandidate c{d, label, heuristics(d)};
        if (c.heuristics.ue_s2 > 0.0 && report.ue2_reference > 0.0)
            c.heuristics.ue2_efficiency = report.ue2_reference / c.heuristics.ue_s2;
        pool.push_back(std::move(c));
    }
    require(!pool.empty(), ErrorKind::EmptyPool, "no candidate designs to sieve");

    // Final step: score everything. The curve for one design can be large, so the
    // designs are scored one at a time and the work inside each is parallel.
    for (auto& c : pool) {
        HilsCandidate scored = score_design(c.design, cfg, supports);
        c.max_value = scored.max_value;
        c.integral_value = scored.integral_value;
        c.fixed_value = scored.fixed_value;
        c.score = scored.score;
    }
    if (cfg.prescreen == PrescreenRule::Criterion) {
        // keep the best m* of each heuristic pool by criterion value
        auto trim = [&](const std::string& source, int keep) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (pool[i].source == source) idx.push_back(i);
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pool[a].score > pool[b].score; });
            std::set<std::size_t> drop(idx.begin() + std::min<std::size_t>(keep, idx.size()), idx.end());
            std::vector<HilsCandidate> kept;
            for (std::size_t i = 0; i < pool.size(); ++i)
                if (!drop.count(i)) kept.push_back(std::move(pool[i]));
            pool = std::move(kept);
        };
        trim("var_s_plus", cfg.m_v_star);
        trim("ue2", cfg.m_u_star);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
        if (pool[i].score > pool[best].score) best = i;
    report.winner = pool[best].design;
    report.winner_index = best;
    switch (cfg.summary) {
        case HilsSummary::Fixed: report.winner_value = pool[best].fixed_value; break;
        case HilsSummary::Max: report.winner_value = pool[best].max_value; break;
        case HilsSummary::Integral: report.winner_value = pool[best].integral_value; break;
    }
    report.candidates = std::move(pool);
    return report;
}

}  // namespace ssdlasso
