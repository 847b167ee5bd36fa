#include "ssdlasso/sign_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "ssdlasso/errors.hpp"
#include "ssdlasso/parallel.hpp"
#include "ssdlasso/qmc.hpp"

namespace ssdlasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Event : std::uint64_t { Sign = 1, Inactive = 2 };

std::uint64_t event_seed(std::uint64_t base, std::span<const int> support, std::span<const int> signs, Event ev) {
    std::uint64_t h = derive_seed(base, {static_cast<std::uint64_t>(ev), support.size()});
    for (int j : support) h = derive_seed(h, {static_cast<std::uint64_t>(j)});
    for (int s : signs) h = derive_seed(h, {static_cast<std::uint64_t>(s + 7)});
    return h;
}

QmcConfig reseeded(const QmcConfig& cfg, std::uint64_t seed) {
    QmcConfig c = cfg;
    c.seed = seed;
    return c;
}

Eigen::VectorXd as_vector(std::span<const int> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

// Sign event for estimated signs `est` when the true coefficients are `beta_signed`.
AffineBoxFamily sign_family(const SupportBlocks& b, int n, const Eigen::VectorXd& beta_signed,
                            const Eigen::VectorXd& est) {
    const auto k = est.size();
    const double rn = std::sqrt(static_cast<double>(n));
    AffineBoxFamily f;
    f.mean_offset = Eigen::VectorXd::Zero(k);
    f.mean_slope = est.asDiagonal() * (b.C_A_inv * est);
    f.covariance = est.asDiagonal() * b.C_A_inv * est.asDiagonal();
    f.lower_offset = Eigen::VectorXd::Constant(k, -kInf);
    f.lower_slope = Eigen::VectorXd::Zero(k);
    f.upper_offset = rn * est.cwiseProduct(b.V_A.cwiseSqrt()).cwiseProduct(beta_signed);
    f.upper_slope = Eigen::VectorXd::Zero(k);
    return f;
}

AffineBoxFamily inactive_family(const SupportBlocks& b, const Eigen::VectorXd& est) {
    const auto q = b.C_I.rows();
    AffineBoxFamily f;
    f.mean_offset = Eigen::VectorXd::Zero(q);
    f.mean_slope = b.C_IA * (b.C_A_inv * est);
    Eigen::MatrixXd cov = b.C_I - b.C_IA * b.C_A_inv * b.C_IA.transpose();
    f.covariance = 0.5 * (cov + cov.transpose());
    f.lower_offset = Eigen::VectorXd::Zero(q);
    f.lower_slope = Eigen::VectorXd::Constant(q, -1.0);
    f.upper_offset = Eigen::VectorXd::Zero(q);
    f.upper_slope = Eigen::VectorXd::Constant(q, 1.0);
    return f;
}

double product_se(const ProbabilityEstimate& a, const ProbabilityEstimate& b) {
    return std::hypot(a.std_error * b.value, b.std_error * a.value);
}

CriterionValue combine(const ProbabilityEstimate& s, const ProbabilityEstimate& i) {
    CriterionValue v;
    v.p_s = s.value;
    v.p_i = i.value;
    v.value = s.value * i.value;
    v.std_error = product_se(s, i);
    return v;
}

// Mean of independent criterion values; `extra_zeros` adds zero-valued members.
CriterionValue average(const std::vector<CriterionValue>& parts, std::size_t extra_zeros = 0) {
    CriterionValue out;
    const double m = static_cast<double>(parts.size() + extra_zeros);
    if (m == 0) return out;
    double var = 0.0;
    for (const auto& v : parts) {
        out.value += v.value;
        out.p_s += v.p_s;
        out.p_i += v.p_i;
        var += v.std_error * v.std_error;
        out.singular_supports += v.singular_supports;
    }
    out.value /= m;
    out.p_s /= m;
    out.p_i /= m;
    out.std_error = std::sqrt(var) / m;
    return out;
}

Eigen::VectorXd signed_beta(const Scenario& sc) {
    Eigen::VectorXd b(sc.k());
    for (int a = 0; a < sc.k(); ++a) b[a] = sc.magnitudes[a] * sc.signs[a];
    return b;
}

}  // namespace

// ---------------------------------------------------------------------------

Scenario Scenario::uniform(Support support, double beta, double lambda) {
    Scenario s;
    const auto k = support.size();
    s.support = std::move(support);
    s.magnitudes.assign(k, beta);
    s.signs.assign(k, 1);
    s.lambda = lambda;
    return s;
}

void Scenario::validate(int p) const {
    require(!support.empty(), ErrorKind::InvalidArgument, "support must be nonempty");
    require(magnitudes.size() == support.size() && signs.size() == support.size(), ErrorKind::DimensionMismatch,
            "support, magnitudes and signs must have equal length");
    std::set<int> seen;
    for (std::size_t a = 0; a < support.size(); ++a) {
        require(support[a] >= 0 && support[a] < p, ErrorKind::InvalidArgument, "support index out of range");
        require(seen.insert(support[a]).second, ErrorKind::InvalidArgument, "support has a repeated index");
        require(magnitudes[a] > 0.0 && std::isfinite(magnitudes[a]), ErrorKind::InvalidArgument,
                "magnitudes must be positive");
        require(signs[a] == 1 || signs[a] == -1, ErrorKind::InvalidArgument, "signs must be +1 or -1");
    }
    require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::InvalidArgument, "lambda must be positive");
}

SignVectorSet SignVectorSet::from_list(std::vector<std::vector<int>> list) {
    require(!list.empty(), ErrorKind::InvalidArgument, "custom sign list is empty");
    for (std::size_t a = 0; a < list.size(); ++a) {
        for (int s : list[a])
            require(s == 1 || s == -1, ErrorKind::InvalidArgument, "sign vectors hold +1/-1 only");
        require(list[a].size() == list[0].size(), ErrorKind::DimensionMismatch, "sign vectors differ in length");
        for (std::size_t b = 0; b < a; ++b) {
            bool mirrored = true;
            for (std::size_t j = 0; j < list[a].size(); ++j) mirrored = mirrored && list[a][j] == -list[b][j];
            require(!mirrored, ErrorKind::InvalidArgument, "custom list holds a vector and its reflection");
        }
    }
    return {SignMode::Custom, std::move(list)};
}

std::vector<std::vector<int>> SignVectorSet::vectors(int k) const {
    switch (mode) {
        case SignMode::Known: return {std::vector<int>(k, 1)};
        case SignMode::AllHalf: {
            require(k <= 24, ErrorKind::TooManySigns, "too many sign classes");
            std::vector<std::vector<int>> out;
            for (unsigned mask = 0; mask < (1u << (k - 1)); ++mask) {
                std::vector<int> z(k, 1);
                for (int j = 1; j < k; ++j)
                    if (mask & (1u << (j - 1))) z[j] = -1;
                out.push_back(std::move(z));
            }
            return out;
        }
        case SignMode::Custom:
            for (const auto& z : custom)
                require(static_cast<int>(z.size()) == k, ErrorKind::DimensionMismatch, "sign vector length != k");
            return custom;
    }
    return {};
}

SupportSet SupportSet::exhaustive(int p, int k) {
    require(k >= 1 && k <= p, ErrorKind::InvalidArgument, "need 1 <= k <= p");
    SupportSet s;
    s.mode = Mode::Exhaustive;
    std::vector<int> idx(k);
    for (int j = 0; j < k; ++j) idx[j] = j;
    for (;;) {
        s.supports.push_back(idx);
        int j = k - 1;
        while (j >= 0 && idx[j] == p - k + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int m = j + 1; m < k; ++m) idx[m] = idx[m - 1] + 1;
    }
    return s;
}

SupportSet SupportSet::from_list(std::vector<Support> list, Mode mode) {
    SupportSet s;
    s.mode = mode;
    s.supports = std::move(list);
    return s;
}

void SupportSet::validate(int p, int k) const {
    require(!supports.empty(), ErrorKind::EmptySupportSet, "no supports to average over");
    std::set<Support> seen;
    for (const auto& a : supports) {
        require(static_cast<int>(a.size()) == k, ErrorKind::InvalidArgument, "support size differs from k");
        Support sorted = a;
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorKind::InvalidArgument,
                "support has a repeated index");
        require(sorted.front() >= 0 && sorted.back() < p, ErrorKind::InvalidArgument, "support index out of range");
        require(seen.insert(sorted).second, ErrorKind::InvalidArgument, "duplicate support");
    }
}

// ---------------------------------------------------------------------------

ProbabilityEstimate prob_sign_event(const StandardizedDesign& sd, const Scenario& sc, const QmcConfig& cfg) {
    sc.validate(sd.factors());
    SupportBlocks b = submatrix_views(sd, sc.support);
    Eigen::VectorXd z = as_vector(sc.signs);
    AffineBoxFamily f = sign_family(b, sd.n, signed_beta(sc), z);
    return box_probability(f.at(sc.lambda * std::sqrt(static_cast<double>(sd.n))),
                           reseeded(cfg, event_seed(cfg.seed, sc.support, sc.signs, Event::Sign)));
}

ProbabilityEstimate prob_inactive_event(const StandardizedDesign& sd, std::span<const int> support,
                                        std::span<const int> signs, double lambda, const QmcConfig& cfg) {
    require(support.size() == signs.size(), ErrorKind::DimensionMismatch, "one sign per support entry");
    require(lambda > 0.0, ErrorKind::InvalidArgument, "lambda must be positive");
    SupportBlocks b = submatrix_views(sd, support);
    if (b.inactive.empty()) return {1.0, 0.0, 0};
    AffineBoxFamily f = inactive_family(b, as_vector(signs));
    return box_probability(f.at(lambda * std::sqrt(static_cast<double>(sd.n))),
                           reseeded(cfg, event_seed(cfg.seed, support, signs, Event::Inactive)));
}

CriterionValue sign_recovery_probability(const StandardizedDesign& sd, const Scenario& sc, const QmcConfig& cfg) {
    ProbabilityEstimate s = prob_sign_event(sd, sc, cfg);
    ProbabilityEstimate i = prob_inactive_event(sd, sc.support, sc.signs, sc.lambda, cfg);
    CriterionValue v = combine(s, i);
    v.lambda_at = sc.lambda;
    return v;
}

CriterionValue sign_averaged_probability(const StandardizedDesign& sd, const Support& support,
                                         const std::vector<double>& magnitudes, double lambda,
                                         const SignVectorSet& signs, const QmcConfig& cfg) {
    auto zs = signs.vectors(static_cast<int>(support.size()));
    require(!zs.empty(), ErrorKind::InvalidArgument, "sign set is empty");
    std::vector<CriterionValue> parts;
    parts.reserve(zs.size());
    for (const auto& z : zs) {
        Scenario sc{support, magnitudes, z, lambda};
        parts.push_back(sign_recovery_probability(sd, sc, cfg));
    }
    CriterionValue v = average(parts);
    v.lambda_at = lambda;
    return v;
}

CriterionValue support_averaged_probability(const StandardizedDesign& sd, int k, double beta, double lambda,
                                            const SupportSet& supports, const SignVectorSet& signs,
                                            const QmcConfig& cfg) {
    supports.validate(sd.factors(), k);
    auto per_support = parallel_map(supports.supports.size(), [&](std::size_t a) {
        try {
            return sign_averaged_probability(sd, supports.supports[a], std::vector<double>(k, beta), lambda, signs,
                                             cfg);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SingularCA) throw;
            CriterionValue zero;
            zero.singular_supports = 1;
            return zero;
        }
    });
    CriterionValue v = average(per_support);
    v.lambda_at = lambda;
    return v;
}

CriterionValue support_recovery_probability(const StandardizedDesign& sd, const Scenario& sc, const QmcConfig& cfg) {
    sc.validate(sd.factors());
    require(sc.k() <= 12, ErrorKind::TooManySigns, "support recovery enumerates 2^k sign vectors; k must be <= 12");
    SupportBlocks b = submatrix_views(sd, sc.support);
    const Eigen::VectorXd beta = signed_beta(sc);
    const double t = sc.lambda * std::sqrt(static_cast<double>(sd.n));
    CriterionValue out;
    double var = 0.0;
    const int k = sc.k();
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
        std::vector<int> est(k);
        for (int j = 0; j < k; ++j) est[j] = (mask & (1u << j)) ? -1 : 1;
        Eigen::VectorXd e = as_vector(est);
        ProbabilityEstimate s =
            box_probability(sign_family(b, sd.n, beta, e).at(t),
                            reseeded(cfg, event_seed(cfg.seed, sc.support, est, Event::Sign)));
        ProbabilityEstimate i{1.0, 0.0, 0};
        if (s.value > 0.0 && !b.inactive.empty())
            i = box_probability(inactive_family(b, e).at(t),
                                reseeded(cfg, event_seed(cfg.seed, sc.support, est, Event::Inactive)));
        CriterionValue term = combine(s, i);
        out.value += term.value;
        var += term.std_error * term.std_error;
        if (est == sc.signs) {
            out.p_s = s.value;
            out.p_i = i.value;
        }
    }
    out.value = std::min(1.0, out.value);
    out.std_error = std::sqrt(var);
    out.lambda_at = sc.lambda;
    return out;
}

// ---------------------------------------------------------------------------

CriterionValue maximize_over_log_lambda(const LogLambdaEvaluator& eval, const MaxSearch& s) {
    require(s.lower < s.upper, ErrorKind::InvalidArgument, "log-lambda range must have lower < upper");
    require(s.grid_points >= 8, ErrorKind::InvalidArgument, "grid_points must be >= 8");
    const double h = (s.upper - s.lower) / (s.grid_points - 1);
    int best = 0;
    CriterionValue best_value;
    best_value.value = -1.0;
    for (int g = 0; g < s.grid_points; ++g) {
        double w = s.lower + g * h;
        CriterionValue v = eval(w);
        if (v.value > best_value.value) {
            best_value = v;
            best = g;
        }
    }
    double best_w = s.lower + best * h;
    best_value.lambda_at = std::exp(best_w);
    if (best_value.value <= 0.0) return best_value;

    // golden-section on the neighbouring grid cells
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = s.lower + std::max(best - 1, 0) * h;
    double b = s.lower + std::min(best + 1, s.grid_points - 1) * h;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    CriterionValue f1 = eval(x1), f2 = eval(x2);
    while (b - a > s.tolerance) {
        if (f1.value >= f2.value) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2);
        }
    }
    const bool left = f1.value >= f2.value;
    CriterionValue refined = left ? f1 : f2;
    double refined_w = left ? x1 : x2;
    if (refined.value > best_value.value) {
        refined.lambda_at = std::exp(refined_w);
        return refined;
    }
    return best_value;
}

CriterionValue integrate_over_log_lambda(const LogLambdaEvaluator& eval, const IntegralRule& rule) {
    require(rule.step > 0.0, ErrorKind::NonPositiveStep, "integration step must be positive");
    require(rule.epsilon >= 0.0, ErrorKind::InvalidArgument, "epsilon must be nonnegative");
    CriterionValue out;
    bool accepted = false;
    double se_sum = 0.0, ps_sum = 0.0, pi_sum = 0.0;
    for (long i = 0;; ++i) {
        double w = rule.lower + static_cast<double>(i) * rule.step;
        if (w > rule.upper_cap + 1e-12) break;
        CriterionValue v = eval(w);
        // with epsilon = 0, leading zeros are skipped rather than accepted
        const bool counts = v.value >= rule.epsilon && (accepted || v.value > 0.0);
        if (counts) {
            accepted = true;
            out.value += v.value;
            // values along a common-random-number curve are positively correlated;
            // summing standard errors bounds the error of the sum
            se_sum += v.std_error;
            ps_sum += v.p_s;
            pi_sum += v.p_i;
            out.singular_supports = v.singular_supports;
        } else if (accepted) {
            break;
        }
    }
    out.value *= rule.step;
    out.std_error = se_sum * rule.step;
    out.p_s = ps_sum * rule.step;
    out.p_i = pi_sum * rule.step;
    return out;
}

// ---------------------------------------------------------------------------

CriterionCurve::CriterionCurve(const StandardizedDesign& sd, int k, double beta, const SupportSet& supports,
                               const SignVectorSet& signs, const QmcConfig& cfg) {
    cfg.validate();
    supports.validate(sd.factors(), k);
    require(beta > 0.0, ErrorKind::InvalidArgument, "beta must be positive");
    sqrt_n_ = std::sqrt(static_cast<double>(sd.n));
    const auto zs = signs.vectors(k);
    require(!zs.empty(), ErrorKind::InvalidArgument, "sign set is empty");
    total_weight_ = supports.supports.size() * zs.size();

    struct PerSupport {
        std::vector<Combo> combos;
        bool singular = false;
    };
    auto built = parallel_map(supports.supports.size(), [&](std::size_t a) {
        PerSupport out;
        const Support& support = supports.supports[a];
        SupportBlocks b;
        try {
            b = submatrix_views(sd, support);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SingularCA) throw;
            out.singular = true;
            return out;
        }
        for (const auto& z : zs) {
            Eigen::VectorXd zv = as_vector(z);
            Eigen::VectorXd beta_signed = beta * zv;
            Combo c{ThresholdCurve::sample(sign_family(b, sd.n, beta_signed, zv),
                                           reseeded(cfg, event_seed(cfg.seed, support, z, Event::Sign))),
                    b.inactive.empty()
                        ? ThresholdCurve::constant(1.0)
                        : ThresholdCurve::sample(inactive_family(b, zv),
                                                 reseeded(cfg, event_seed(cfg.seed, support, z, Event::Inactive)))};
            out.combos.push_back(std::move(c));
        }
        return out;
    });
    for (auto& ps : built) {
        if (ps.singular) ++singular_;
        for (auto& c : ps.combos) combos_.push_back(std::move(c));
    }
}

CriterionValue CriterionCurve::at_lambda(double lambda) const {
    const double t = lambda * sqrt_n_;
    CriterionValue out;
    double var = 0.0;
    for (const auto& c : combos_) {
        ProbabilityEstimate s = c.sign_event.at(t);
        ProbabilityEstimate i = c.inactive_event.at(t);
        out.value += s.value * i.value;
        out.p_s += s.value;
        out.p_i += i.value;
        double se = product_se(s, i);
        var += se * se;
    }
    const double m = static_cast<double>(total_weight_);
    out.value /= m;
    out.p_s /= m;
    out.p_i /= m;
    out.std_error = std::sqrt(var) / m;
    out.lambda_at = lambda;
    out.singular_supports = singular_;
    return out;
}

CriterionValue CriterionCurve::at_log_lambda(double log_lambda) const { return at_lambda(std::exp(log_lambda)); }

LogLambdaEvaluator CriterionCurve::evaluator() const {
    return [this](double w) { return at_log_lambda(w); };
}

std::size_t CriterionCurve::memory_bytes() const noexcept {
    std::size_t total = 0;
    for (const auto& c : combos_) total += c.sign_event.memory_bytes() + c.inactive_event.memory_bytes();
    return total;
}

std::vector<CurveRow> tabulate(const LogLambdaEvaluator& eval, std::span<const double> log_lambdas) {
    std::vector<CurveRow> rows;
    rows.reserve(log_lambdas.size());
    for (double w : log_lambdas) rows.push_back({w, eval(w)});
    return rows;
}

std::string curve_csv(std::span<const CurveRow> rows) {
    std::ostringstream out;
    out.precision(10);
    out << "log_lambda,value,p_s,p_i\n";
    for (const auto& r : rows) out << r.log_lambda << ',' << r.value.value << ',' << r.value.p_s << ',' << r.value.p_i << '\n';
    return out.str();
}

}  // namespace ssdlasso
