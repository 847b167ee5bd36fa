#include "ssdlasso/sym.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "ssdlasso/errors.hpp"
#include "ssdlasso/normal.hpp"
#include "ssdlasso/parallel.hpp"
#include "ssdlasso/qmc.hpp"

namespace ssdlasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int count_negative(std::span<const int> z) {
    return static_cast<int>(std::count(z.begin(), z.end(), -1));
}

// Probabilities depend on the signs only through the number of negative entries,
// so the seed does too; c and lambda are left out to keep common random numbers.
QmcConfig sym_seeded(const QmcConfig& cfg, int negatives, std::uint64_t event) {
    QmcConfig c = cfg;
    c.seed = derive_seed(cfg.seed, {0x53796dULL, event, static_cast<std::uint64_t>(negatives)});
    return c;
}

void check_signs(const SymScenario& s, std::span<const int> z) {
    require(static_cast<int>(z.size()) == s.k, ErrorKind::DimensionMismatch, "sign vector length must equal k");
    for (int v : z) require(v == 1 || v == -1, ErrorKind::InvalidArgument, "signs must be +1 or -1");
}

}  // namespace

double SymScenario::lower_c() const noexcept {
    double lo = -kInf;
    if (k > 1) lo = std::max(lo, -1.0 / (k - 1));
    if (p() > 1) lo = std::max(lo, -1.0 / (p() - 1));
    return lo;
}

void SymScenario::validate() const {
    require(n >= 2 && k >= 1 && q >= 1, ErrorKind::InvalidArgument, "need n >= 2, k >= 1, q >= 1");
    require(beta > 0.0, ErrorKind::InvalidArgument, "beta must be positive");
    require(std::isfinite(c) && c > lower_c() && c < 1.0, ErrorKind::InvalidC,
            "c = " + std::to_string(c) + " outside the admissible interval");
}

ProbabilityEstimate sym_prob_sign_event(const SymScenario& s, std::span<const int> z, double lambda,
                                        const QmcConfig& cfg) {
    s.validate();
    check_signs(s, z);
    require(lambda > 0.0, ErrorKind::InvalidArgument, "lambda must be positive");
    const double rn = std::sqrt(static_cast<double>(s.n));
    const double ln = lambda * rn;
    if (s.c == 0.0 && cfg.exact_shortcuts)
        return {std::pow(normal_cdf(rn * (s.beta - lambda)), s.k), 0.0, s.k};
    const double g = s.gamma();
    const int zsum = s.k - 2 * count_negative(z);
    // Work with w = Z u, whose covariance (I - gamma J)/(1-c) is equicorrelated.
    GaussianRegion r;
    r.mean.resize(s.k);
    r.lower.resize(s.k);
    r.upper.resize(s.k);
    for (int i = 0; i < s.k; ++i) {
        double u_mean = ln / (1.0 - s.c) * (1.0 - zsum * g * z[i]);
        r.mean[i] = z[i] * u_mean;
        if (z[i] > 0) {
            r.lower[i] = -kInf;
            r.upper[i] = rn * s.beta;
        } else {
            r.lower[i] = -rn * s.beta;
            r.upper[i] = kInf;
        }
    }
    r.covariance = (Eigen::MatrixXd::Identity(s.k, s.k) - g * Eigen::MatrixXd::Ones(s.k, s.k)) / (1.0 - s.c);
    return box_probability(r, sym_seeded(cfg, count_negative(z), 1));
}

ProbabilityEstimate sym_prob_inactive_event(const SymScenario& s, std::span<const int> z, double lambda,
                                            const QmcConfig& cfg) {
    s.validate();
    check_signs(s, z);
    require(lambda > 0.0, ErrorKind::InvalidArgument, "lambda must be positive");
    const double ln = lambda * std::sqrt(static_cast<double>(s.n));
    if (s.c == 0.0 && cfg.exact_shortcuts)
        return {std::pow(std::max(0.0, 2.0 * normal_cdf(ln) - 1.0), s.q), 0.0, s.q};
    const double g = s.gamma();
    const int zsum = s.k - 2 * count_negative(z);
    GaussianRegion r;
    r.mean = Eigen::VectorXd::Constant(s.q, ln * zsum * g);
    r.covariance = (1.0 - s.c) * (Eigen::MatrixXd::Identity(s.q, s.q) + g * Eigen::MatrixXd::Ones(s.q, s.q));
    r.lower = Eigen::VectorXd::Constant(s.q, -ln);
    r.upper = Eigen::VectorXd::Constant(s.q, ln);
    return box_probability(r, sym_seeded(cfg, count_negative(z), 2));
}

double sym_criterion_at_zero(int n, int k, int q, double beta, double lambda) {
    const double rn = std::sqrt(static_cast<double>(n));
    return std::pow(normal_cdf(rn * (beta - lambda)), k) * std::pow(2.0 * normal_cdf(lambda * rn) - 1.0, q);
}

CriterionValue sym_criterion(const SymScenario& s, double lambda, SymSignMode mode, const QmcConfig& cfg,
                             double skip_below) {
    s.validate();
    CriterionValue out;
    out.lambda_at = lambda;
    // Among sign vectors with a positive first entry, m negatives occur C(k-1, m) times.
    // A vector and its reflection share both probabilities, so m and k-m coincide.
    struct Class {
        double weight;
        std::vector<int> z;
        ProbabilityEstimate pi;
    };
    std::vector<Class> classes;
    const int top = mode == SymSignMode::Known ? 0 : s.k / 2;
    for (int m = 0; m <= top; ++m) {
        double weight = 1.0;
        if (mode == SymSignMode::Unknown) {
            weight = static_cast<double>(binomial(s.k - 1, m));
            if (s.k - m != m && s.k - m <= s.k - 1) weight += static_cast<double>(binomial(s.k - 1, s.k - m));
        }
        std::vector<int> z(s.k, 1);
        for (int j = 0; j < m; ++j) z[s.k - 1 - j] = -1;
        classes.push_back({weight, z, {}});
    }
    double total_weight = 0.0, pi_mean = 0.0;
    for (auto& cl : classes) {
        cl.pi = sym_prob_inactive_event(s, cl.z, lambda, cfg);
        total_weight += cl.weight;
        pi_mean += cl.weight * cl.pi.value;
    }
    pi_mean /= total_weight;
    if (pi_mean < skip_below) {
        // the product cannot reach skip_below; report the bound P(I) with P(S) taken as 1
        out.value = pi_mean;
        out.p_i = pi_mean;
        out.p_s = 1.0;
        return out;
    }
    double var = 0.0;
    for (const auto& cl : classes) {
        ProbabilityEstimate ps = sym_prob_sign_event(s, cl.z, lambda, cfg);
        out.value += cl.weight * ps.value * cl.pi.value;
        out.p_s += cl.weight * ps.value;
        out.p_i += cl.weight * cl.pi.value;
        double se = std::hypot(ps.std_error * cl.pi.value, cl.pi.std_error * ps.value);
        var += cl.weight * cl.weight * se * se;
    }
    out.value /= total_weight;
    out.p_s /= total_weight;
    out.p_i /= total_weight;
    out.std_error = std::sqrt(var) / total_weight;
    return out;
}

CriterionValue sym_summary(const SymScenario& s, SymSignMode mode, SummaryKind kind, const QmcConfig& cfg,
                           const SummaryConfig& summary) {
    s.validate();
    // below epsilon the integral only needs to know the value is small
    const double skip = kind == SummaryKind::Integral ? summary.integral.epsilon : 0.0;
    LogLambdaEvaluator eval = [&](double w) { return sym_criterion(s, std::exp(w), mode, cfg, skip); };
    if (kind == SummaryKind::Max) return maximize_over_log_lambda(eval, summary.max_search);
    return integrate_over_log_lambda(eval, summary.integral);
}

CorrelationOptimum optimize_correlation(int n, int k, int q, double beta, SymSignMode mode, SummaryKind kind,
                                        double tolerance, const QmcConfig& cfg, const SummaryConfig& summary,
                                        std::vector<double> starts) {
    require(tolerance > 0.0, ErrorKind::InvalidArgument, "tolerance must be positive");
    require(!starts.empty(), ErrorKind::InvalidArgument, "need at least one start");
    SymScenario base{n, k, q, beta, 0.0};
    base.validate();
    CorrelationOptimum out;
    out.lower = std::max({base.lower_c() + 1e-3, -0.5});
    if (k > 1) out.lower = std::max(out.lower, -1.0 / (k - 1) + 1e-3);
    out.upper = 0.99;

    auto objective = [&](double c) { return sym_summary(base.with_c(c), mode, kind, cfg, summary).value; };

    // shared across starts; a start that walks into another's territory reuses its values
    std::map<double, double> memo;
    std::mutex memo_mu;
    auto run_start = [&](std::size_t idx) {
        std::vector<std::pair<double, double>> seen;
        auto f = [&](double c) {
            {
                std::lock_guard lock(memo_mu);
                auto it = memo.find(c);
                if (it != memo.end()) {
                    seen.emplace_back(c, it->second);
                    return it->second;
                }
            }
            double v = objective(c);
            std::lock_guard lock(memo_mu);
            memo.emplace(c, v);
            seen.emplace_back(c, v);
            return v;
        };
        const double lo = out.lower, hi = out.upper;
        const double s = std::clamp(starts[idx], lo, hi);
        const double h = 0.05;
        // bracket a local maximum by walking uphill with doubling steps
        double a, b;
        const double xr = std::min(s + h, hi), xl = std::max(s - h, lo);
        const double fs = f(s), fr = xr > s ? f(xr) : -kInf, fl = xl < s ? f(xl) : -kInf;
        if (fs >= fr && fs >= fl) {
            a = xl;
            b = xr;
        } else {
            const double dir = fr > fl ? 1.0 : -1.0;
            double prev = s, cur = dir > 0 ? xr : xl, fcur = dir > 0 ? fr : fl, step = h;
            for (;;) {
                step *= 2.0;
                double next = std::clamp(cur + dir * step, lo, hi);
                if (next == cur) {
                    a = std::min(prev, cur);
                    b = std::max(prev, cur);
                    break;
                }
                double fnext = f(next);
                if (fnext <= fcur) {
                    a = std::min(prev, next);
                    b = std::max(prev, next);
                    break;
                }
                prev = cur;
                cur = next;
                fcur = fnext;
            }
        }
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
        double f1 = f(x1), f2 = f(x2);
        while (b - a > tolerance) {
            if (f1 >= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = f(x2);
            }
        }
        StartOutcome res{starts[idx], f1 >= f2 ? x1 : x2, std::max(f1, f2)};
        // an endpoint or bracket point can beat the refined interior on a flat or monotone stretch
        for (const auto& [c, v] : seen)
            if (v > res.value) res = {starts[idx], c, v};
        return res;
    };

    out.starts = parallel_map(starts.size(), run_start);
    out.c_star = out.starts.front().c;
    out.value = out.starts.front().value;
    for (const auto& r : out.starts)
        if (r.value > out.value) {
            out.value = r.value;
            out.c_star = r.c;
        }
    return out;
}

ConditionReport known_sign_gain_condition(int n, double beta, double lambda) {
    const double rn = std::sqrt(static_cast<double>(n));
    ConditionReport r;
    r.lambda = lambda;
    r.lhs = 2.0 * lambda * rn;
    r.rhs = inverse_mills(rn * (beta - lambda));
    r.holds = r.lhs >= r.rhs;
    return r;
}

ConditionReport orthogonal_local_max_condition(int n, int k, int q, double beta, double lambda) {
    ConditionReport r;
    r.lambda = lambda;
    if (k < 2) {
        r.applicable = false;
        return r;
    }
    const double rn = std::sqrt(static_cast<double>(n));
    const double ln = lambda * rn, bn = beta * rn, tau = rn * (beta - lambda);
    const double g_delta = std::erf(ln / std::sqrt(2.0));  // cdf(ln) - cdf(-ln)
    const double ratio = ln * normal_pdf(ln) / g_delta;
    r.lhs = q / static_cast<double>(binomial(k, 2)) * ratio * (k * (1.0 - ln * ln) + (q - 1) * ratio);
    const double m = inverse_mills(tau);
    r.rhs = m * (bn + ln + ln * ln * tau - ((bn * bn - ln * ln) / 2.0 + bn * ln) * m);
    r.holds = r.lhs <= r.rhs;
    return r;
}

std::vector<Interval> condition_regions(const std::function<bool(double)>& holds, double lo, double hi,
                                        int resolution, double tolerance) {
    require(lo < hi && resolution >= 2, ErrorKind::InvalidArgument, "bad scan range");
    auto refine = [&](double a, double b) {
        // holds(a) != holds(b); returns the switching point
        const bool ha = holds(a);
        while (b - a > tolerance) {
            double mid = 0.5 * (a + b);
            if (holds(mid) == ha) a = mid;
            else b = mid;
        }
        return 0.5 * (a + b);
    };
    std::vector<Interval> out;
    double prev_x = lo;
    bool prev = holds(lo);
    double start = prev ? lo : 0.0;
    for (int i = 1; i <= resolution; ++i) {
        double x = lo + (hi - lo) * i / resolution;
        bool cur = holds(x);
        if (cur != prev) {
            double edge = refine(prev_x, x);
            if (cur) start = edge;
            else out.emplace_back(start, edge);
        }
        prev = cur;
        prev_x = x;
    }
    if (prev) out.emplace_back(start, hi);
    return out;
}

DerivativeReport derivative_check(int n, int k, int q, double beta, double lambda, const QmcConfig& cfg, double h) {
    SymScenario base{n, k, q, beta, 0.0};
    base.validate();
    require(h > 0.0 && -h > base.lower_c(), ErrorKind::InvalidArgument, "finite-difference step leaves the c domain");
    DerivativeReport rep;
    rep.lambda = lambda;
    rep.gain_condition = known_sign_gain_condition(n, beta, lambda).holds;
    rep.local_max_condition = orthogonal_local_max_condition(n, k, q, beta, lambda).holds;

    // f(c) -> (value, std error)
    using Fn = std::function<std::pair<double, double>(double)>;
    const std::vector<int> ones(k, 1);
    Fn inactive = [&](double c) {
        auto e = sym_prob_inactive_event(base.with_c(c), ones, lambda, cfg);
        return std::pair{e.value, e.std_error};
    };
    Fn known = [&](double c) {
        auto v = sym_criterion(base.with_c(c), lambda, SymSignMode::Known, cfg);
        return std::pair{v.value, v.std_error};
    };
    Fn unknown = [&](double c) {
        auto v = sym_criterion(base.with_c(c), lambda, SymSignMode::Unknown, cfg);
        return std::pair{v.value, v.std_error};
    };

    // Richardson table over steps h, h/2, h/4, h/8 for a difference quotient with an
    // error series in h^2. The bound is the last table correction, or the propagated
    // QMC error if that is larger.
    constexpr int levels = 4;
    auto richardson = [&](const std::function<std::pair<double, double>(double)>& quotient) {
        std::vector<double> d(levels), sd(levels);
        double step = h;
        for (int i = 0; i < levels; ++i, step /= 2.0) std::tie(d[i], sd[i]) = quotient(step);
        auto extrapolate = [&](std::vector<double> col) {
            std::vector<double> diag{col[0]};
            for (int j = 1; j < levels; ++j) {
                const double p = std::pow(4.0, j);
                for (int i = levels - 1; i >= j; --i) col[i] = (p * col[i] - col[i - 1]) / (p - 1.0);
                diag.push_back(col[j]);
            }
            return diag;
        };
        const auto diag = extrapolate(d);
        double var = 0.0;
        for (int i = 0; i < levels; ++i) {
            std::vector<double> unit(levels, 0.0);
            unit[i] = 1.0;
            const double w = extrapolate(unit).back();
            var += w * w * sd[i] * sd[i];
        }
        DerivativeEstimate e;
        e.estimate = diag.back();
        e.bound = std::max(std::sqrt(var), std::fabs(diag[levels - 1] - diag[levels - 2]));
        return e;
    };
    auto first = [&](const Fn& f) {
        return richardson([&](double step) {
            auto [fp, sp] = f(step);
            auto [fm, sm] = f(-step);
            return std::pair{(fp - fm) / (2.0 * step), std::hypot(sp, sm) / (2.0 * step)};
        });
    };
    auto second = [&](const Fn& f) {
        auto [f0, s0] = f(0.0);
        return richardson([&](double step) {
            auto [fp, sp] = f(step);
            auto [fm, sm] = f(-step);
            double var = sp * sp + sm * sm + 4.0 * s0 * s0;
            return std::pair{(fp - 2.0 * f0 + fm) / (step * step), std::sqrt(var) / (step * step)};
        });
    };
    rep.inactive = first(inactive);
    rep.known = first(known);
    rep.unknown = first(unknown);
    rep.unknown_second = second(unknown);
    return rep;
}

std::vector<ContourCell> contour_grid(int n, int k, int q, double beta, SymSignMode mode, Interval c_range,
                                      Interval log_lambda_range, int resolution, const QmcConfig& cfg) {
    require(resolution >= 1, ErrorKind::InvalidArgument, "resolution must be positive");
    require(c_range.first <= c_range.second && log_lambda_range.first <= log_lambda_range.second,
            ErrorKind::InvalidArgument, "ranges must be ordered");
    auto axis = [resolution](Interval r, int i) {
        return resolution == 1 ? r.first : r.first + (r.second - r.first) * i / (resolution - 1);
    };
    const std::size_t cells = static_cast<std::size_t>(resolution) * resolution;
    return parallel_map(cells, [&](std::size_t idx) {
        int ci = static_cast<int>(idx) / resolution, li = static_cast<int>(idx) % resolution;
        double c = axis(c_range, ci), w = axis(log_lambda_range, li);
        SymScenario s{n, k, q, beta, c};
        return ContourCell{c, w, sym_criterion(s, std::exp(w), mode, cfg).value};
    });
}

std::string contour_csv(std::span<const ContourCell> cells) {
    std::ostringstream out;
    out.precision(10);
    out << "c,log_lambda,value\n";
    for (const auto& cell : cells) out << cell.c << ',' << cell.log_lambda << ',' << cell.value << '\n';
    return out.str();
}

}  // namespace ssdlasso
