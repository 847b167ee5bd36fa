#pragma once
// Two-level designs, their centred/scaled form, and the classic heuristics.

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssdlasso {

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
using Support = std::vector<int>;  // 0-based factor indices

class Design {
public:
    explicit Design(IntMatrix x);

    int runs() const noexcept { return static_cast<int>(x_.rows()); }
    int factors() const noexcept { return static_cast<int>(x_.cols()); }
    const IntMatrix& matrix() const noexcept { return x_; }
    int operator()(int i, int j) const noexcept { return x_(i, j); }

    // Multiplies column j by signs[j].
    Design with_column_signs(std::span<const int> signs) const;
    // Column j of the result is column order[j] of this design.
    Design with_columns(std::span<const int> order) const;

    static Design parse_csv(std::string_view text);
    static Design load_csv(const std::filesystem::path& path);
    std::string to_csv() const;
    void save_csv(const std::filesystem::path& path) const;

    bool operator==(const Design& other) const { return x_ == other.x_; }

private:
    IntMatrix x_;
};

struct StandardizedDesign {
    int n = 0;
    Eigen::MatrixXd F;  // n x p, centred, unit mean square on usable columns
    Eigen::MatrixXd C;  // FᵀF / n
    Eigen::VectorXd V;  // centred column variances
    std::vector<int> degenerate_columns;

    int factors() const noexcept { return static_cast<int>(C.cols()); }
    bool is_degenerate(int j) const noexcept;
};

StandardizedDesign standardize(const Design& design);

struct HeuristicSummary {
    double ue_s2 = 0.0;  // mean of s_ij^2 over 0 <= i < j <= p
    double ue_s = 0.0;   // mean of s_ij over the same pairs
    double var_s = 0.0;  // ue_s2 - ue_s^2
    std::optional<double> e_s2;  // only for column-balanced designs
    std::optional<double> ue2_efficiency;
    double sum_s2 = 0.0;  // raw sums
    double sum_s = 0.0;
    long pairs = 0;
};

HeuristicSummary heuristics(const Design& design);
double ue2_efficiency(const Design& design, double reference);
double ue2_efficiency(const HeuristicSummary& summary, double reference);

struct SupportBlocks {
    Support active;
    std::vector<int> inactive;  // usable (non-degenerate) columns outside the support
    Eigen::MatrixXd C_A, C_IA, C_I;
    Eigen::MatrixXd C_A_inv;
    Eigen::VectorXd V_A;
    Eigen::MatrixXd F_A;
};

// Throws DegenerateSupport or SingularCA (condition number above 1e12).
SupportBlocks submatrix_views(const StandardizedDesign& std_design, std::span<const int> support);

long binomial(int n, int k) noexcept;

}  // namespace ssdlasso
