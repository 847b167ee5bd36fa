#pragma once
// Exact-design sign recovery probabilities and their summaries over lambda.

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ssdlasso/design.hpp"
#include "ssdlasso/mvn.hpp"

namespace ssdlasso {

struct Scenario {
    Support support;
    std::vector<double> magnitudes;  // |beta_A|, one per support entry
    std::vector<int> signs;          // z_A
    double lambda = 1.0;

    static Scenario uniform(Support support, double beta, double lambda);  // all signs +1
    int k() const noexcept { return static_cast<int>(support.size()); }
    void validate(int p) const;
};

enum class SignMode { Known, AllHalf, Custom };

struct SignVectorSet {
    SignMode mode = SignMode::Known;
    std::vector<std::vector<int>> custom;

    static SignVectorSet known() { return {}; }
    static SignVectorSet all_half() { return {SignMode::AllHalf, {}}; }
    static SignVectorSet from_list(std::vector<std::vector<int>> list);

    // Known -> the single all-ones vector; AllHalf -> the 2^(k-1) vectors with first entry +1.
    std::vector<std::vector<int>> vectors(int k) const;
};

struct SupportSet {
    enum class Mode { Exhaustive, Nbibd, Explicit };
    Mode mode = Mode::Explicit;
    std::vector<Support> supports;

    static SupportSet exhaustive(int p, int k);
    static SupportSet from_list(std::vector<Support> list, Mode mode = Mode::Explicit);
    void validate(int p, int k) const;
};

struct CriterionValue {
    double value = 0.0;
    double p_s = 0.0;
    double p_i = 0.0;
    double std_error = 0.0;
    double lambda_at = std::numeric_limits<double>::quiet_NaN();
    int singular_supports = 0;
};

ProbabilityEstimate prob_sign_event(const StandardizedDesign& sd, const Scenario& scenario, const QmcConfig& config);
ProbabilityEstimate prob_inactive_event(const StandardizedDesign& sd, std::span<const int> support,
                                        std::span<const int> signs, double lambda, const QmcConfig& config);

// P(S) * P(I) at a fixed lambda.
CriterionValue sign_recovery_probability(const StandardizedDesign& sd, const Scenario& scenario,
                                         const QmcConfig& config);
// Mean of the above over a set of sign vectors for one support.
CriterionValue sign_averaged_probability(const StandardizedDesign& sd, const Support& support,
                                         const std::vector<double>& magnitudes, double lambda,
                                         const SignVectorSet& signs, const QmcConfig& config);
// Mean over supports of the sign-averaged probability, magnitudes all equal to beta.
// Supports with a singular active block score 0 and are counted.
CriterionValue support_averaged_probability(const StandardizedDesign& sd, int k, double beta, double lambda,
                                            const SupportSet& supports, const SignVectorSet& signs,
                                            const QmcConfig& config);
// Probability that the estimated support equals the true one, any signs. k <= 12.
CriterionValue support_recovery_probability(const StandardizedDesign& sd, const Scenario& scenario,
                                            const QmcConfig& config);

// ---- summaries over log(lambda) ----

using LogLambdaEvaluator = std::function<CriterionValue(double)>;

struct MaxSearch {
    double lower = -5.0;
    double upper = 2.0;
    int grid_points = 64;
    double tolerance = 1e-7;  // final bracket width in log lambda
};

// Grid warm start, then golden-section refinement around the best grid point.
CriterionValue maximize_over_log_lambda(const LogLambdaEvaluator& eval, const MaxSearch& search = {});

struct IntegralRule {
    double lower = -5.0;
    double step = 0.02;
    double epsilon = 1e-5;
    double upper_cap = 5.0;
};

// Left Riemann sum from `lower`; accepted while the value is >= epsilon, and stops
// at the first value below epsilon once anything has been accepted.
CriterionValue integrate_over_log_lambda(const LogLambdaEvaluator& eval, const IntegralRule& rule = {});

// Averaged criterion as a function of lambda. All sampling happens at construction;
// afterwards any lambda is cheap and the curve is smooth because every lambda
// shares the same random numbers.
class CriterionCurve {
public:
    CriterionCurve(const StandardizedDesign& sd, int k, double beta, const SupportSet& supports,
                   const SignVectorSet& signs, const QmcConfig& config);

    CriterionValue at_lambda(double lambda) const;
    CriterionValue at_log_lambda(double log_lambda) const;
    LogLambdaEvaluator evaluator() const;
    int singular_supports() const noexcept { return singular_; }
    std::size_t memory_bytes() const noexcept;

private:
    struct Combo {
        ThresholdCurve sign_event;
        ThresholdCurve inactive_event;
    };
    std::vector<Combo> combos_;
    std::size_t total_weight_ = 0;  // combos including singular ones
    int singular_ = 0;
    double sqrt_n_ = 1.0;
};

struct CurveRow {
    double log_lambda;
    CriterionValue value;
};

std::vector<CurveRow> tabulate(const LogLambdaEvaluator& eval, std::span<const double> log_lambdas);
std::string curve_csv(std::span<const CurveRow> rows);

}  // namespace ssdlasso
