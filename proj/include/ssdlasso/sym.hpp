#pragma once
// Criteria under a completely symmetric correlation matrix (1-c)I + cJ with unit
// scaling, as functions of the single correlation c.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssdlasso/mvn.hpp"
#include "ssdlasso/sign_recovery.hpp"

namespace ssdlasso {

struct SymScenario {
    int n = 10;
    int k = 4;
    int q = 6;
    double beta = 2.0;
    double c = 0.0;

    int p() const noexcept { return k + q; }
    double gamma() const noexcept { return c / (1.0 + c * (k - 1)); }
    // Smallest admissible c (exclusive): both the active block and the full matrix stay PSD.
    double lower_c() const noexcept;
    void validate() const;  // InvalidC / InvalidArgument
    SymScenario with_c(double value) const {
        SymScenario s = *this;
        s.c = value;
        return s;
    }
};

enum class SymSignMode { Known, Unknown };
enum class SummaryKind { Max, Integral };

ProbabilityEstimate sym_prob_sign_event(const SymScenario& sym, std::span<const int> signs, double lambda,
                                        const QmcConfig& config);
ProbabilityEstimate sym_prob_inactive_event(const SymScenario& sym, std::span<const int> signs, double lambda,
                                            const QmcConfig& config);

// Known: signs all +1. Unknown: mean over the 2^(k-1) reflection classes.
// If the mean P(I) is below skip_below the sign event is not evaluated and the
// returned value is that upper bound.
CriterionValue sym_criterion(const SymScenario& sym, double lambda, SymSignMode mode, const QmcConfig& config,
                             double skip_below = 0.0);
// Closed form at c = 0 (identical for both sign modes).
double sym_criterion_at_zero(int n, int k, int q, double beta, double lambda);

struct SummaryConfig {
    MaxSearch max_search{};
    IntegralRule integral{};
};

CriterionValue sym_summary(const SymScenario& sym, SymSignMode mode, SummaryKind kind, const QmcConfig& config,
                           const SummaryConfig& summary = {});

struct StartOutcome {
    double start = 0.0;
    double c = 0.0;
    double value = 0.0;
};

struct CorrelationOptimum {
    double c_star = 0.0;
    double value = 0.0;
    double lower = 0.0, upper = 0.0;
    std::vector<StartOutcome> starts;
};

// Golden-section search over c from several starts.
CorrelationOptimum optimize_correlation(int n, int k, int q, double beta, SymSignMode mode, SummaryKind kind,
                                        double tolerance, const QmcConfig& config, const SummaryConfig& summary = {},
                                        std::vector<double> starts = {-0.2, 0.0, 0.2, 0.5});

struct ConditionReport {
    double lambda = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    bool applicable = true;
};

// Sufficient condition for the known-sign criterion to increase in c at c = 0:
// 2*lambda*sqrt(n) >= pdf(tau)/cdf(tau), tau = sqrt(n)(beta - lambda).
ConditionReport known_sign_gain_condition(int n, double beta, double lambda);
// Condition under which c = 0 is a local maximum of the unknown-sign criterion.
// Not applicable for k < 2.
ConditionReport orthogonal_local_max_condition(int n, int k, int q, double beta, double lambda);

using Interval = std::pair<double, double>;
// Maximal log-lambda intervals inside [lo, hi] where `holds` is true; ends refined by bisection.
std::vector<Interval> condition_regions(const std::function<bool(double)>& holds, double lo, double hi,
                                        int resolution = 2000, double tolerance = 1e-10);

struct DerivativeEstimate {
    double estimate = 0.0;
    double bound = 0.0;  // error bound: QMC propagation or Richardson truncation, whichever is larger
};

struct DerivativeReport {
    double lambda = 0.0;
    DerivativeEstimate inactive;        // d/dc P(I), known sign
    DerivativeEstimate known;           // d/dc of the known-sign criterion
    DerivativeEstimate unknown;         // d/dc of the unknown-sign criterion
    DerivativeEstimate unknown_second;  // d2/dc2 of the unknown-sign criterion
    bool gain_condition = false;
    bool local_max_condition = false;
};

DerivativeReport derivative_check(int n, int k, int q, double beta, double lambda, const QmcConfig& config,
                                  double h = 1e-2);

struct ContourCell {
    double c;
    double log_lambda;
    double value;
};

std::vector<ContourCell> contour_grid(int n, int k, int q, double beta, SymSignMode mode, Interval c_range,
                                      Interval log_lambda_range, int resolution, const QmcConfig& config);
std::string contour_csv(std::span<const ContourCell> cells);

}  // namespace ssdlasso
