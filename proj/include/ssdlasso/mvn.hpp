#pragma once
// Box probabilities for (possibly degenerate) multivariate normal vectors.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

namespace ssdlasso {

struct GaussianRegion {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd lower;  // may hold -inf
    Eigen::VectorXd upper;  // may hold +inf

    Eigen::Index dim() const noexcept { return mean.size(); }
    // Throws DimensionMismatch / InvalidArgument. PSD-ness is checked when factorizing.
    void validate() const;
};

struct QmcConfig {
    std::uint64_t sample_budget = 4096;  // points per randomization
    int randomizations = 8;
    std::uint64_t seed = 20240917;
    double rank_tolerance = 1e-10;
    // Closed forms for d <= 1 are always used; this switch controls the
    // diagonal and equicorrelated fast paths.
    bool exact_shortcuts = true;

    void validate() const;
};

struct ProbabilityEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int rank_used = 0;
};

struct PsdFactor {
    Eigen::MatrixXd factor;  // d x r, orthogonal columns scaled by sqrt eigenvalues
    int rank = 0;
};

PsdFactor factorize_psd(const Eigen::MatrixXd& covariance, double rank_tolerance);

ProbabilityEstimate box_probability(const GaussianRegion& region, const QmcConfig& config);

// Exact value by one-dimensional quadrature when every variance is equal and every
// covariance is equal and nonnegative. Returns nothing if the structure does not apply.
std::optional<ProbabilityEstimate> equicorrelated_probability(const GaussianRegion& region);

// X(t) = mean_offset + t*mean_slope + N(0, covariance) against the box
// [lower_offset + t*lower_slope, upper_offset + t*upper_slope], t >= 0.
struct AffineBoxFamily {
    Eigen::VectorXd mean_offset, mean_slope;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd lower_offset, lower_slope;
    Eigen::VectorXd upper_offset, upper_slope;

    Eigen::Index dim() const noexcept { return mean_offset.size(); }
    GaussianRegion at(double t) const;
};

// Probability of an AffineBoxFamily as a function of t using one shared set of
// samples. Each sample's event holds on a single t-interval; the sorted interval
// ends are kept so any t is answered by binary search.
class ThresholdCurve {
public:
    static ThresholdCurve sample(const AffineBoxFamily& family, const QmcConfig& config);
    static ThresholdCurve constant(double value);

    ProbabilityEstimate at(double t) const;
    std::size_t memory_bytes() const noexcept;

private:
    struct Block {
        std::vector<float> starts;
        std::vector<float> ends;
    };
    std::vector<Block> blocks_;
    double per_block_ = 0.0;
    // rank-zero families: one deterministic interval
    bool deterministic_ = false;
    double det_lo_ = 0.0, det_hi_ = -1.0;
    double constant_ = -1.0;
    int rank_ = 0;
};

}  // namespace ssdlasso
