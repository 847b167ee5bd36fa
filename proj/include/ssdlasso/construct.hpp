#pragma once
// Design construction: coordinate exchange for the heuristics, the block
// construction with positive constant correlation, constant-column padding,
// balanced support subsampling, and the heuristic-seeded lasso sieve.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssdlasso/design.hpp"
#include "ssdlasso/sign_recovery.hpp"

namespace ssdlasso {

struct ExchangeConfig {
    int starts = 50;
    int max_passes = 200;
    std::uint64_t seed = 1;
    std::optional<double> ue2_efficiency_floor;
    std::optional<double> ue_s_floor;
    std::optional<double> ue2_reference;
};

struct ExchangeResult {
    Design design;
    HeuristicSummary summary;
    std::vector<double> trace;  // objective after every accepted flip of the winning start
    int start = 0;
};

// Minimises UE(s^2) by single-cell flips.
ExchangeResult exchange_ue2(int n, int p, const ExchangeConfig& config);
// Minimises Var(s) subject to the configured UE(s^2)-efficiency and UE(s) floors.
// Throws InfeasibleConstraints if no start reaches feasibility.
ExchangeResult exchange_var_s_plus(int n, int p, const ExchangeConfig& config);

// Columns of [[2I-J, -J], [J, J-2I]] (blocks of size n/2): the first k1 of the left
// block column and the first k - k1 of the right one.
Design block_construction(int n, int k, int k1);

// Entries of C_A^{-1} 1 for the block construction (one value per block column).
std::pair<double, double> xi_values(int n, int k1, int k2);

struct SignBoundRatio {
    double ratio_scale;       // (1 - xi) / (1 - v)
    double ratio_sqrt_scale;  // (1 - xi) / (1 - sqrt(v))
};
// beta/lambda limits for the sign-event bound, v the common scaling entry.
SignBoundRatio sign_bound_ratio(double xi, double v);

// Appends p - k constant +1 columns to an n x k active block.
Design pad_with_constant_columns(const Design& active, int p);

// Nearly balanced subsample of k-subsets of p factors.
SupportSet nbibd_supports(int p, int k, int blocks, std::uint64_t seed);

struct SupportBalance {
    int factor_spread = 0;  // max - min factor occurrence
    int pair_spread = 0;    // max - min pair co-occurrence
};
SupportBalance support_balance(const SupportSet& set, int p);

enum class HilsSummary { Fixed, Max, Integral };
enum class PrescreenRule { Heuristic, Criterion };

struct HilsConfig {
    int n = 9, p = 10, k = 3;
    double beta = 3.0;
    HilsSummary summary = HilsSummary::Max;
    SignMode sign_mode = SignMode::AllHalf;
    double lambda = 1.0;  // for the fixed summary
    int m_v = 50, m_u = 50;
    int m_v_star = 50, m_u_star = 50;
    int exchange_starts = 1;     // starts per pooled design
    int reference_starts = 200;  // starts for the UE(s^2) reference
    int max_passes = 200;
    std::vector<double> efficiency_floors{0.5, 0.6, 0.7};
    std::vector<double> ue_s_floors{0.0};
    std::optional<double> ue2_reference;
    // supports: 0 blocks means exhaustive
    int nbibd_blocks = 0;
    std::vector<Support> explicit_supports;
    std::vector<std::pair<std::string, Design>> extra_designs;
    PrescreenRule prescreen = PrescreenRule::Heuristic;
    std::uint64_t seed = 1;
    QmcConfig qmc{};
    MaxSearch max_search{};
    IntegralRule integral{};

    void validate() const;
};

struct HilsCandidate {
    Design design;
    std::string source;  // "var_s_plus", "ue2" or the extra design label
    HeuristicSummary heuristics;
    double efficiency_floor = 0.0;  // for var_s_plus designs
    double ue_s_floor = 0.0;
    CriterionValue max_value;
    CriterionValue integral_value;
    CriterionValue fixed_value;
    double score = 0.0;
};

struct HilsReport {
    Design winner;
    CriterionValue winner_value;
    std::size_t winner_index = 0;
    double ue2_reference = 0.0;
    std::vector<HilsCandidate> candidates;
};

HilsReport hils(const HilsConfig& config);

// Scores one design under every summary the sieve reports.
HilsCandidate score_design(const Design& design, const HilsConfig& config, const SupportSet& supports);

}  // namespace ssdlasso
