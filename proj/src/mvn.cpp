#include "ssdlasso/mvn.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "ssdlasso/errors.hpp"
#include "ssdlasso/normal.hpp"
#include "ssdlasso/qmc.hpp"

namespace ssdlasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ProbabilityEstimate summarize(const std::vector<double>& per_rand, int rank) {
    const double m = static_cast<double>(per_rand.size());
    double mean = std::accumulate(per_rand.begin(), per_rand.end(), 0.0) / m;
    double ss = 0.0;
    for (double v : per_rand) ss += (v - mean) * (v - mean);
    double sd = m > 1 ? std::sqrt(ss / (m - 1)) : 0.0;
    return {std::clamp(mean, 0.0, 1.0), sd / std::sqrt(m), rank};
}

double interval_mass(double lo, double hi) {
    // upper-tail form keeps precision when both ends are large and positive
    if (lo > 0) return std::max(0.0, normal_cdf(-lo) - normal_cdf(-hi));
    return std::max(0.0, normal_cdf(hi) - normal_cdf(lo));
}


// Coordinates with negligible variance next to the largest one. Their value is the mean.
std::vector<Eigen::Index> degenerate_coordinates(const Eigen::MatrixXd& cov, double rank_tolerance) {
    std::vector<Eigen::Index> out;
    const double top = cov.rows() ? cov.diagonal().maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
        if (cov(i, i) <= rank_tolerance * top || top <= 0.0) out.push_back(i);
    return out;
}

std::vector<Eigen::Index> complement(const std::vector<Eigen::Index>& drop, Eigen::Index d) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0, j = 0; i < d; ++i) {
        if (j < static_cast<Eigen::Index>(drop.size()) && drop[j] == i) {
            ++j;
            continue;
        }
        keep.push_back(i);
    }
    return keep;
}

// Ties on the boundary count as inside; roundoff must not decide them.
bool tolerant_le(double a, double b) { return a <= b + 1e-9 * (1.0 + std::fabs(a) + std::fabs(b)); }

bool is_diagonal(const Eigen::MatrixXd& c) {
    const double scale = std::max(1.0, c.diagonal().cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j)
            if (i != j && std::fabs(c(i, j)) > 1e-15 * scale) return false;
    return true;
}

// Product of independent coordinate probabilities; zero-variance coordinates are indicators.
ProbabilityEstimate diagonal_probability(const GaussianRegion& r) {
    double p = 1.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < r.dim(); ++i) {
        double v = r.covariance(i, i);
        if (v <= 0.0) {
            p *= (r.mean[i] >= r.lower[i] && r.mean[i] <= r.upper[i]) ? 1.0 : 0.0;
            continue;
        }
        ++rank;
        double s = std::sqrt(v);
        p *= interval_mass((r.lower[i] - r.mean[i]) / s, (r.upper[i] - r.mean[i]) / s);
    }
    return {p, 0.0, rank};
}

// Genz sequential conditioning with variable prioritisation. Requires a positive
// definite covariance; returns nothing if a pivot collapses.
std::optional<ProbabilityEstimate> genz_probability(const GaussianRegion& r, const QmcConfig& cfg) {
    const Eigen::Index d = r.dim();
    Eigen::VectorXd a = r.lower - r.mean;
    Eigen::VectorXd b = r.upper - r.mean;
    Eigen::MatrixXd c = r.covariance;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
    const double scale = c.diagonal().maxCoeff();

    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::Index best = -1;
        double best_mass = kInf;
        for (Eigen::Index j = i; j < d; ++j) {
            double s = c(j, j) - L.row(j).head(i).squaredNorm();
            if (s <= 1e-12 * scale) continue;
            double sd = std::sqrt(s);
            double shift = L.row(j).head(i).dot(y.head(i));
            double mass = interval_mass((a[j] - shift) / sd, (b[j] - shift) / sd);
            if (mass < best_mass) { best_mass = mass; best = j; }
        }
        if (best < 0) return std::nullopt;
        if (best != i) {
            std::swap(a[i], a[best]);
            std::swap(b[i], b[best]);
            c.row(i).swap(c.row(best));
            c.col(i).swap(c.col(best));
            L.row(i).swap(L.row(best));
        }
        double piv = c(i, i) - L.row(i).head(i).squaredNorm();
        if (piv <= 1e-12 * scale) return std::nullopt;
        L(i, i) = std::sqrt(piv);
        for (Eigen::Index j = i + 1; j < d; ++j)
            L(j, i) = (c(j, i) - L.row(j).head(i).dot(L.row(i).head(i))) / L(i, i);
        double shift = L.row(i).head(i).dot(y.head(i));
        double lo = (a[i] - shift) / L(i, i), hi = (b[i] - shift) / L(i, i);
        double mass = interval_mass(lo, hi);
        if (mass > 1e-300) {
            y[i] = (normal_pdf(lo) - normal_pdf(hi)) / mass;
        } else {
            y[i] = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
        }
    }

    const double first = interval_mass(a[0] / L(0, 0), b[0] / L(0, 0));
    if (d == 1) return ProbabilityEstimate{first, 0.0, 1};

    std::vector<double> per_rand(cfg.randomizations);
    std::vector<double> pt(d - 1), ys(d);
    for (int rr = 0; rr < cfg.randomizations; ++rr) {
        ShiftedLattice lattice(d - 1, derive_seed(cfg.seed, {0x47656e7aULL, static_cast<std::uint64_t>(rr)}));
        double sum = 0.0;
        for (std::uint64_t n = 1; n <= cfg.sample_budget; ++n) {
            lattice.point(n, pt.data());
            double lo = a[0] / L(0, 0), hi = b[0] / L(0, 0);
            double dl = normal_cdf(lo), el = normal_cdf(hi);
            double f = el - dl;
            for (Eigen::Index k = 1; k < d && f > 0.0; ++k) {
                double u = std::clamp(dl + pt[k - 1] * (el - dl), 1e-300, 1.0 - 1e-16);
                ys[k - 1] = normal_quantile(u);
                double shift = 0.0;
                for (Eigen::Index m = 0; m < k; ++m) shift += L(k, m) * ys[m];
                dl = normal_cdf((a[k] - shift) / L(k, k));
                el = normal_cdf((b[k] - shift) / L(k, k));
                f *= std::max(0.0, el - dl);
            }
            sum += f;
        }
        per_rand[rr] = sum / static_cast<double>(cfg.sample_budget);
    }
    return summarize(per_rand, static_cast<int>(d));
}

// Indicator estimator for X = mean + B e with e ~ N(0, I_r).
ProbabilityEstimate indicator_probability(const GaussianRegion& r, const PsdFactor& f, const QmcConfig& cfg) {
    const Eigen::Index d = r.dim();
    const int rank = f.rank;
    std::vector<double> per_rand(cfg.randomizations);
    std::vector<double> pt(rank);
    Eigen::VectorXd e(rank);
    for (int rr = 0; rr < cfg.randomizations; ++rr) {
        ShiftedLattice lattice(rank, derive_seed(cfg.seed, {0x496e6469ULL, static_cast<std::uint64_t>(rr)}));
        std::uint64_t hits = 0;
        for (std::uint64_t n = 1; n <= cfg.sample_budget; ++n) {
            lattice.point(n, pt.data());
            for (int j = 0; j < rank; ++j) e[j] = normal_quantile(pt[j]);
            bool inside = true;
            for (Eigen::Index i = 0; i < d && inside; ++i) {
                double x = r.mean[i] + f.factor.row(i).dot(e);
                inside = x >= r.lower[i] && x <= r.upper[i];
            }
            hits += inside ? 1 : 0;
        }
        per_rand[rr] = static_cast<double>(hits) / static_cast<double>(cfg.sample_budget);
    }
    return summarize(per_rand, rank);
}

}  // namespace

void GaussianRegion::validate() const {
    const auto d = mean.size();
    require(covariance.rows() == d && covariance.cols() == d && lower.size() == d && upper.size() == d,
            ErrorKind::DimensionMismatch, "region components disagree on dimension");
    const double scale = d > 0 ? std::max(1e-300, covariance.cwiseAbs().maxCoeff()) : 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        require(std::isfinite(mean[i]), ErrorKind::NonFinite, "region mean is not finite");
        require(!std::isnan(lower[i]) && !std::isnan(upper[i]) && lower[i] <= upper[i], ErrorKind::InvalidArgument,
                "box bound lower > upper");
        for (Eigen::Index j = 0; j < i; ++j)
            require(std::fabs(covariance(i, j) - covariance(j, i)) <= 1e-10 * scale, ErrorKind::InvalidArgument,
                    "covariance is not symmetric");
    }
}

void QmcConfig::validate() const {
    require(sample_budget >= 256, ErrorKind::InvalidArgument, "sample_budget must be >= 256");
    require(randomizations >= 8, ErrorKind::InvalidArgument, "randomizations must be >= 8");
    require(rank_tolerance > 0.0 && rank_tolerance <= 1e-4, ErrorKind::InvalidArgument,
            "rank_tolerance must lie in (0, 1e-4]");
}

PsdFactor factorize_psd(const Eigen::MatrixXd& covariance, double rank_tolerance) {
    require(covariance.rows() == covariance.cols(), ErrorKind::DimensionMismatch, "covariance is not square");
    const auto d = covariance.rows();
    if (d == 0) return {Eigen::MatrixXd(0, 0), 0};
    Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double top = std::max(0.0, ev.maxCoeff());
    require(ev.minCoeff() >= -1e-8 * std::max(top, 1e-300) || top == 0.0, ErrorKind::NotPsd,
            "covariance has a negative eigenvalue");
    if (top == 0.0) {
        require(ev.minCoeff() >= 0.0, ErrorKind::NotPsd, "covariance has a negative eigenvalue");
        return {Eigen::MatrixXd(d, 0), 0};
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = d - 1; j >= 0; --j)
        if (ev[j] > rank_tolerance * top) keep.push_back(j);
    PsdFactor out{Eigen::MatrixXd(d, static_cast<Eigen::Index>(keep.size())), static_cast<int>(keep.size())};
    for (std::size_t c = 0; c < keep.size(); ++c)
        out.factor.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(ev[keep[c]]);
    return out;
}

namespace {

// Phi(x + iy) by Taylor expansion in iy about x. Terms are carried as
// He_m(x) y^m / m! so nothing overflows; meant for |y| up to about 1.5.
std::complex<double> normal_cdf_complex(double x, double y) {
    if (std::isinf(x) || std::fabs(x) > 40.0) return {x > 0 ? 1.0 : 0.0, 0.0};
    const double pdf = normal_pdf(x);
    const std::complex<double> cycle[4] = {{0, 1}, {1, 0}, {0, -1}, {-1, 0}};
    std::complex<double> sum = normal_cdf(x);
    double prev = 0.0, cur = 1.0;  // h_{m-1}, h_m with h_0 = 1
    int quiet = 0;
    for (int n = 1; n < 400 && quiet < 3; ++n) {
        const double term = pdf * y * cur / n;  // magnitude of the n-th term
        sum += cycle[(n - 1) % 4] * term;
        quiet = std::fabs(term) < 1e-18 ? quiet + 1 : 0;
        const double next = y / n * (x * cur - y * prev);
        prev = cur;
        cur = next;
    }
    return sum;
}

}  // namespace

std::optional<ProbabilityEstimate> equicorrelated_probability(const GaussianRegion& r) {
    const auto d = r.dim();
    if (d < 2) return std::nullopt;
    const double var = r.covariance(0, 0);
    const double cov = r.covariance(1, 0);
    if (!(var > 0.0)) return std::nullopt;
    const double tol = 1e-13 * var;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            double target = i == j ? var : cov;
            if (std::fabs(r.covariance(i, j) - target) > tol) return std::nullopt;
        }
    if (cov >= var * (1.0 - 1e-9)) return std::nullopt;
    using boost::math::quadrature::gauss_kronrod;
    const double resid = std::sqrt(var - cov);
    if (cov >= 0.0) {
        const double common = std::sqrt(cov);
        auto integrand = [&](double z) {
            double prod = normal_pdf(z);
            for (Eigen::Index i = 0; i < d && prod > 0.0; ++i) {
                double centre = r.mean[i] + common * z;
                prod *= interval_mass((r.lower[i] - centre) / resid, (r.upper[i] - centre) / resid);
            }
            return prod;
        };
        double value = gauss_kronrod<double, 61>::integrate(integrand, -12.0, 12.0, 20, 1e-13);
        return ProbabilityEstimate{std::clamp(value, 0.0, 1.0), 0.0, static_cast<int>(d)};
    }
    // Negative correlation: the common factor becomes imaginary. The integrand grows
    // like exp(d y^2 / 2), so only mild correlations are handled here.
    const double common = std::sqrt(-cov);
    const double decay = 1.0 - static_cast<double>(d) * (-cov) / (resid * resid);
    if (decay <= 0.0) return std::nullopt;
    const double reach = std::sqrt(80.0 / decay);
    if (common * reach / resid > 1.5) return std::nullopt;
    auto integrand = [&](double z) {
        std::complex<double> prod = normal_pdf(z);
        const double y = -common * z / resid;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double lo = (r.lower[i] - r.mean[i]) / resid, hi = (r.upper[i] - r.mean[i]) / resid;
            prod *= normal_cdf_complex(hi, y) - normal_cdf_complex(lo, y);
        }
        return prod.real();
    };
    double value = gauss_kronrod<double, 61>::integrate(integrand, -reach, reach, 20, 1e-13);
    return ProbabilityEstimate{std::clamp(value, 0.0, 1.0), 0.0, static_cast<int>(d)};
}

ProbabilityEstimate box_probability(const GaussianRegion& region, const QmcConfig& config) {
    config.validate();
    region.validate();
    const auto d = region.dim();
    if (d == 0) return {1.0, 0.0, 0};
    if (auto flat = degenerate_coordinates(region.covariance, config.rank_tolerance); !flat.empty()) {
        for (auto i : flat)
            if (!tolerant_le(region.lower[i], region.mean[i]) || !tolerant_le(region.mean[i], region.upper[i]))
                return {0.0, 0.0, 0};
        const auto keep = complement(flat, d);
        if (keep.empty()) return {1.0, 0.0, 0};
        GaussianRegion rest{region.mean(keep), region.covariance(keep, keep), region.lower(keep), region.upper(keep)};
        return box_probability(rest, config);
    }
    if (d == 1 || (config.exact_shortcuts && is_diagonal(region.covariance))) {
        require(region.covariance.diagonal().minCoeff() >= 0.0, ErrorKind::NotPsd, "negative variance");
        return diagonal_probability(region);
    }
    PsdFactor f = factorize_psd(region.covariance, config.rank_tolerance);
    if (config.exact_shortcuts) {
        if (auto eq = equicorrelated_probability(region)) return *eq;
    }
    if (f.rank == d) {
        if (auto g = genz_probability(region, config)) return *g;
    }
    return indicator_probability(region, f, config);
}

GaussianRegion AffineBoxFamily::at(double t) const {
    GaussianRegion r;
    r.mean = mean_offset + t * mean_slope;
    r.covariance = covariance;
    r.lower.resize(dim());
    r.upper.resize(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) {
        r.lower[i] = std::isinf(lower_offset[i]) ? lower_offset[i] : lower_offset[i] + t * lower_slope[i];
        r.upper[i] = std::isinf(upper_offset[i]) ? upper_offset[i] : upper_offset[i] + t * upper_slope[i];
    }
    return r;
}

namespace {

struct TInterval {
    double lo = 0.0, hi = kInf;
    void apply(double alpha, double beta) {
        // alpha * t <= beta
        if (alpha == 0.0) {
            if (beta < 0.0) hi = -1.0;
        } else if (alpha > 0.0) {
            hi = std::min(hi, beta / alpha);
        } else {
            lo = std::max(lo, beta / alpha);
        }
    }
    bool empty() const { return !(lo <= hi); }
    // alpha * t <= beta for a coordinate without noise, up to roundoff
    void apply_tolerant(double alpha, double beta, double scale) {
        const double tol = 1e-9 * (1.0 + scale);
        if (std::fabs(alpha) <= tol) {
            if (beta < -tol) hi = -1.0;
        } else {
            apply(alpha, beta + tol);
        }
    }
    void intersect(const TInterval& o) {
        lo = std::max(lo, o.lo);
        hi = std::min(hi, o.hi);
    }
};

TInterval deterministic_interval(const AffineBoxFamily& fam, const std::vector<Eigen::Index>& coords) {
    TInterval iv;
    for (auto i : coords) {
        if (!std::isinf(fam.lower_offset[i])) {
            const double scale = std::fabs(fam.lower_slope[i]) + std::fabs(fam.mean_slope[i]) +
                                 std::fabs(fam.mean_offset[i]) + std::fabs(fam.lower_offset[i]);
            iv.apply_tolerant(fam.lower_slope[i] - fam.mean_slope[i], fam.mean_offset[i] - fam.lower_offset[i], scale);
        }
        if (!std::isinf(fam.upper_offset[i])) {
            const double scale = std::fabs(fam.upper_slope[i]) + std::fabs(fam.mean_slope[i]) +
                                 std::fabs(fam.mean_offset[i]) + std::fabs(fam.upper_offset[i]);
            iv.apply_tolerant(fam.mean_slope[i] - fam.upper_slope[i], fam.upper_offset[i] - fam.mean_offset[i], scale);
        }
    }
    return iv;
}

AffineBoxFamily restrict_family(const AffineBoxFamily& fam, const std::vector<Eigen::Index>& keep) {
    AffineBoxFamily r;
    r.mean_offset = fam.mean_offset(keep);
    r.mean_slope = fam.mean_slope(keep);
    r.covariance = fam.covariance(keep, keep);
    r.lower_offset = fam.lower_offset(keep);
    r.lower_slope = fam.lower_slope(keep);
    r.upper_offset = fam.upper_offset(keep);
    r.upper_slope = fam.upper_slope(keep);
    return r;
}

TInterval sample_interval(const AffineBoxFamily& fam, const Eigen::VectorXd& w) {
    TInterval iv;
    for (Eigen::Index i = 0; i < fam.dim() && !iv.empty(); ++i) {
        if (!std::isinf(fam.lower_offset[i]))
            iv.apply(fam.lower_slope[i] - fam.mean_slope[i], fam.mean_offset[i] + w[i] - fam.lower_offset[i]);
        if (!std::isinf(fam.upper_offset[i]))
            iv.apply(fam.mean_slope[i] - fam.upper_slope[i], fam.upper_offset[i] - fam.mean_offset[i] - w[i]);
    }
    return iv;
}

}  // namespace

ThresholdCurve ThresholdCurve::constant(double value) {
    ThresholdCurve c;
    c.constant_ = value;
    return c;
}

ThresholdCurve ThresholdCurve::sample(const AffineBoxFamily& fam, const QmcConfig& cfg) {
    cfg.validate();
    const auto d = fam.dim();
    require(fam.mean_slope.size() == d && fam.covariance.rows() == d && fam.covariance.cols() == d &&
                fam.lower_offset.size() == d && fam.lower_slope.size() == d && fam.upper_offset.size() == d &&
                fam.upper_slope.size() == d,
            ErrorKind::DimensionMismatch, "affine family components disagree on dimension");
    if (d == 0) return constant(1.0);
    const auto flat_coords = degenerate_coordinates(fam.covariance, cfg.rank_tolerance);
    const TInterval fixed = deterministic_interval(fam, flat_coords);
    const auto keep = complement(flat_coords, d);
    const AffineBoxFamily noisy = restrict_family(fam, keep);
    PsdFactor f = factorize_psd(noisy.covariance, cfg.rank_tolerance);
    ThresholdCurve out;
    out.rank_ = f.rank;
    if (f.rank == 0) {
        TInterval iv = fixed;
        if (!keep.empty()) iv.intersect(sample_interval(noisy, Eigen::VectorXd::Zero(noisy.dim())));
        out.deterministic_ = true;
        out.det_lo_ = iv.lo;
        out.det_hi_ = iv.empty() ? -1.0 : iv.hi;
        if (iv.empty()) out.det_lo_ = 0.0;
        return out;
    }
    out.per_block_ = static_cast<double>(cfg.sample_budget);
    out.blocks_.resize(cfg.randomizations);
    std::vector<double> pt(f.rank);
    Eigen::VectorXd e(f.rank);
    for (int rr = 0; rr < cfg.randomizations; ++rr) {
        ShiftedLattice lattice(f.rank, derive_seed(cfg.seed, {0x43757276ULL, static_cast<std::uint64_t>(rr)}));
        Block& blk = out.blocks_[rr];
        blk.starts.reserve(cfg.sample_budget);
        blk.ends.reserve(cfg.sample_budget);
        for (std::uint64_t n = 1; n <= cfg.sample_budget; ++n) {
            lattice.point(n, pt.data());
            for (int j = 0; j < f.rank; ++j) e[j] = normal_quantile(pt[j]);
            TInterval iv = sample_interval(noisy, f.factor * e);
            iv.intersect(fixed);
            if (iv.empty()) continue;
            blk.starts.push_back(static_cast<float>(iv.lo));
            blk.ends.push_back(static_cast<float>(iv.hi));
        }
        std::sort(blk.starts.begin(), blk.starts.end());
        std::sort(blk.ends.begin(), blk.ends.end());
        blk.starts.shrink_to_fit();
        blk.ends.shrink_to_fit();
    }
    return out;
}

ProbabilityEstimate ThresholdCurve::at(double t) const {
    if (constant_ >= 0.0) return {constant_, 0.0, 0};
    if (deterministic_) return {(t >= det_lo_ && t <= det_hi_) ? 1.0 : 0.0, 0.0, 0};
    std::vector<double> per(blocks_.size());
    for (std::size_t r = 0; r < blocks_.size(); ++r) {
        const Block& b = blocks_[r];
        // count of intervals with start <= t minus those with end < t
        auto started = std::upper_bound(b.starts.begin(), b.starts.end(), t,
                                        [](double v, float s) { return v < static_cast<double>(s); }) -
                       b.starts.begin();
        auto finished = std::lower_bound(b.ends.begin(), b.ends.end(), t,
                                         [](float s, double v) { return static_cast<double>(s) < v; }) -
                        b.ends.begin();
        per[r] = static_cast<double>(started - finished) / per_block_;
    }
    return summarize(per, rank_);
}

std::size_t ThresholdCurve::memory_bytes() const noexcept {
    std::size_t total = sizeof(*this);
    for (const auto& b : blocks_) total += (b.starts.capacity() + b.ends.capacity()) * sizeof(float);
    return total;
}

}  // namespace ssdlasso
