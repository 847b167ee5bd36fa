#include "ssdlasso/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ssdlasso/errors.hpp"
#include "ssdlasso/parallel.hpp"
#include "ssdlasso/qmc.hpp"

namespace ssdlasso {

namespace {

double soft_threshold(double x, double t) noexcept {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

Eigen::VectorXd centred(const StandardizedDesign& sd, const Eigen::VectorXd& y) {
    require(y.size() == sd.n, ErrorKind::DimensionMismatch, "response length must equal the run count");
    require(y.allFinite(), ErrorKind::NonFinite, "response contains non-finite values");
    return y.array() - y.mean();
}

}  // namespace

double lasso_objective(const StandardizedDesign& sd, const Eigen::VectorXd& y, double lambda,
                       const Eigen::VectorXd& coefficients) {
    Eigen::VectorXd r = centred(sd, y) - sd.F * coefficients;
    return r.squaredNorm() / (2.0 * sd.n) + lambda * coefficients.lpNorm<1>();
}

LassoFit lasso_solve(const StandardizedDesign& sd, const Eigen::VectorXd& y, double lambda, const LassoOptions& options) {
    require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::InvalidArgument, "lambda must be positive");
    const int p = sd.factors();
    const double n = sd.n;
    Eigen::VectorXd r = centred(sd, y);
    LassoFit fit;
    fit.coefficients = Eigen::VectorXd::Zero(p);
    std::vector<int> usable;
    for (int j = 0; j < p; ++j)
        if (!sd.is_degenerate(j)) usable.push_back(j);

    auto objective = [&] { return r.squaredNorm() / (2.0 * n) + lambda * fit.coefficients.lpNorm<1>(); };
    for (fit.iterations = 0; fit.iterations < options.max_sweeps;) {
        double largest = 0.0;
        for (int j : usable) {
            const double old = fit.coefficients[j];
            // unit diagonal in C, so the update is a plain soft-threshold
            const double rho = sd.F.col(j).dot(r) / n + old;
            const double updated = soft_threshold(rho, lambda);
            if (updated != old) {
                r -= (updated - old) * sd.F.col(j);
                fit.coefficients[j] = updated;
                largest = std::max(largest, std::fabs(updated - old));
            }
        }
        ++fit.iterations;
        if (options.keep_trace) fit.objective_trace.push_back(objective());
        if (largest < options.tolerance) {
            fit.converged = true;
            break;
        }
    }
    for (int j = 0; j < p; ++j) {
        if (std::fabs(fit.coefficients[j]) <= options.zero_threshold) {
            fit.coefficients[j] = 0.0;
            continue;
        }
        fit.support.push_back(j);
        fit.signs.push_back(fit.coefficients[j] > 0 ? 1 : -1);
    }
    fit.objective = lasso_objective(sd, y, lambda, fit.coefficients);
    return fit;
}

KktReport kkt_check(const StandardizedDesign& sd, const Eigen::VectorXd& y, double lambda, const LassoFit& fit, double tol) {
    require(fit.coefficients.size() == sd.factors(), ErrorKind::DimensionMismatch, "fit does not match the design");
    Eigen::VectorXd r = centred(sd, y) - sd.F * fit.coefficients;
    Eigen::VectorXd grad = sd.F.transpose() * r / static_cast<double>(sd.n);
    KktReport rep;
    double worst_inactive = 0.0;
    for (int j = 0; j < sd.factors(); ++j) {
        if (sd.is_degenerate(j)) continue;
        const double b = fit.coefficients[j];
        if (b != 0.0) {
            const int s = b > 0 ? 1 : -1;
            rep.stationarity = std::max(rep.stationarity, std::fabs(grad[j] - lambda * s));
            // b = (C_A)^-1(F_Aᵀy/n - lambda z): the sign must agree with the fitted direction
            if (grad[j] * s < -tol) rep.signs_consistent = false;
        } else {
            worst_inactive = std::max(worst_inactive, std::fabs(grad[j]));
        }
    }
    rep.inactive_slack = lambda - worst_inactive;
    rep.passed = rep.stationarity <= tol && rep.signs_consistent && rep.inactive_slack >= -tol;
    return rep;
}

std::pair<double, double> wilson_interval(long hits, long trials, double z) {
    require(trials > 0 && hits >= 0 && hits <= trials, ErrorKind::InvalidArgument, "invalid hit counts");
    const double n = static_cast<double>(trials);
    const double ph = hits / n;
    const double z2 = z * z;
    const double centre = (ph + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

SimResult simulate_sign_recovery(const Design& design, const Scenario& scenario, const SimConfig& sim) {
    require(sim.replications >= 1, ErrorKind::InvalidArgument, "need at least one replication");
    const int p = design.factors();
    // an empty support is the null model: success means every coefficient stays at zero
    if (scenario.k() > 0) scenario.validate(p);
    require(scenario.magnitudes.size() == scenario.support.size() && scenario.signs.size() == scenario.support.size(),
            ErrorKind::DimensionMismatch, "support, magnitudes and signs must have equal length");
    require(std::isfinite(sim.lambda) && sim.lambda > 0.0, ErrorKind::InvalidArgument, "lambda must be positive");
    const StandardizedDesign sd = standardize(design);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int a = 0; a < scenario.k(); ++a) beta[scenario.support[a]] = scenario.signs[a] * scenario.magnitudes[a];
    const Eigen::VectorXd mean = design.matrix().cast<double>() * beta;

    auto hits = parallel_map(static_cast<std::size_t>(sim.replications), [&](std::size_t rep) -> int {
        Rng rng(derive_seed(sim.seed, {0x73696dULL, rep}));
        std::normal_distribution<double> noise;
        Eigen::VectorXd y = mean;
        for (int i = 0; i < y.size(); ++i) y[i] += noise(rng);
        LassoFit fit = lasso_solve(sd, y, sim.lambda);
        for (int j = 0; j < p; ++j) {
            const int want = beta[j] > 0 ? 1 : (beta[j] < 0 ? -1 : 0);
            const int got = fit.coefficients[j] > 0 ? 1 : (fit.coefficients[j] < 0 ? -1 : 0);
            if (want != got) return 0;
        }
        return 1;
    });
    SimResult out;
    out.replications = sim.replications;
    for (int h : hits) out.hits += h;
    out.empirical = static_cast<double>(out.hits) / out.replications;
    std::tie(out.ci_low, out.ci_high) = wilson_interval(out.hits, out.replications);
    out.std_error = std::sqrt(out.empirical * (1 - out.empirical) / out.replications);
    return out;
}

}  // namespace ssdlasso
