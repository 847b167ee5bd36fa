#pragma once
// Coordinate-descent lasso on the standardized design, plus a simulation
// estimate of exact sign recovery used to cross-check the analytic engine.
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ssdlasso/design.hpp"
#include "ssdlasso/sign_recovery.hpp"

namespace ssdlasso {

struct LassoFit {
    Eigen::VectorXd coefficients;  // standardized scale
    Support support;
    std::vector<int> signs;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // one entry per sweep
};

struct LassoOptions {
    double tolerance = 1e-10;
    int max_sweeps = 100000;
    double zero_threshold = 1e-9;
    bool keep_trace = false;
};

// Minimises (1/2n)|y_c - F b|^2 + lambda |b|_1; y is centred internally.
LassoFit lasso_solve(const StandardizedDesign& sd, const Eigen::VectorXd& y, double lambda,
                     const LassoOptions& options = {});

double lasso_objective(const StandardizedDesign& sd, const Eigen::VectorXd& y, double lambda,
                       const Eigen::VectorXd& coefficients);

struct KktReport {
    bool passed = false;
    double stationarity = 0.0;   // max |F_jᵀr/n - lambda sign(b_j)| over the active set
    bool signs_consistent = true;
    double inactive_slack = 0.0; // lambda - max |F_jᵀr/n| over inactive usable columns
};

KktReport kkt_check(const StandardizedDesign& sd, const Eigen::VectorXd& y, double lambda, const LassoFit& fit,
                    double tol = 1e-8);

struct SimConfig {
    int replications = 10000;
    std::uint64_t seed = 1;
    double lambda = 1.0;
};

struct SimResult {
    double empirical = 0.0;
    long hits = 0;
    long replications = 0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double std_error = 0.0;  // binomial standard error of the hit fraction
};

// Wilson score interval at 95%.
std::pair<double, double> wilson_interval(long hits, long trials, double z = 1.959963984540054);

// y = X beta + e with e ~ N(0, I); a hit means sign(b) equals sign(beta) on every column.
SimResult simulate_sign_recovery(const Design& design, const Scenario& scenario, const SimConfig& sim);

}  // namespace ssdlasso
