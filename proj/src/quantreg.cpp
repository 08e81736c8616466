#include "fpld/quantreg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fpld/parallel.hpp"

namespace fpld {
namespace {

constexpr double kSmoothingFloor = 1e-6;

// Exact minimisation of the check loss along one coordinate. The section is
// piecewise linear and convex; the minimiser sits at the breakpoint where the
// accumulated subgradient first turns nonnegative.
double coordinate_minimum(const Eigen::VectorXd& residual_without, const Eigen::VectorXd& column,
                          double p) {
    struct Breakpoint {
        double t;
        double jump;
    };
    std::vector<Breakpoint> breakpoints;
    breakpoints.reserve(static_cast<std::size_t>(column.size()));
    double slope = 0.0;
    for (Eigen::Index i = 0; i < column.size(); ++i) {
        const double x = column[i];
        if (x == 0.0) continue;
        breakpoints.push_back({residual_without[i] / x, std::abs(x)});
        slope -= x > 0.0 ? x * p : -x * (1.0 - p);
    }
    if (breakpoints.empty()) return 0.0;
    std::sort(breakpoints.begin(), breakpoints.end(),
              [](const Breakpoint& a, const Breakpoint& b) { return a.t < b.t; });
    for (const Breakpoint& bp : breakpoints) {
        slope += bp.jump;
        if (slope >= 0.0) return bp.t;
    }
    return breakpoints.back().t;
}

void require_valid(const Design& design, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("fit_quantile_regression: probability outside (0, 1)");
    if (design.rows() <= design.coefficients())
        throw std::domain_error("fit_quantile_regression: need more rows than coefficients");
}

}  // namespace

Design standardize(const std::vector<std::string>& names, const Eigen::MatrixXd& raw_covariates,
                   Eigen::VectorXd y) {
    const Eigen::Index n = raw_covariates.rows();
    const Eigen::Index k = raw_covariates.cols();
    if (static_cast<Eigen::Index>(names.size()) != k)
        throw std::domain_error("standardize: covariate name count mismatch");
    if (y.size() != n) throw std::domain_error("standardize: response length mismatch");
    if (!raw_covariates.allFinite() || !y.allFinite())
        throw std::domain_error("standardize: non-finite entries in the design");

    Design design;
    design.y = std::move(y);
    design.standardization.names = names;
    design.standardization.mean.resize(k);
    design.standardization.sd.resize(k);
    design.X.resize(n, k + 1);
    design.X.col(0).setOnes();
    for (Eigen::Index j = 0; j < k; ++j) {
        const double mean = raw_covariates.col(j).mean();
        const double ss = (raw_covariates.col(j).array() - mean).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (!(sd > 0.0))
            throw std::domain_error("standardize: covariate '" + names[static_cast<std::size_t>(j)] +
                                    "' has zero variance");
        design.standardization.mean[j] = mean;
        design.standardization.sd[j] = sd;
        design.X.col(j + 1) = (raw_covariates.col(j).array() - mean) / sd;
    }
    return design;
}

Eigen::VectorXd standardized_row(const Standardization& record,
                                 const Eigen::VectorXd& raw_covariates) {
    if (raw_covariates.size() != record.mean.size())
        throw std::domain_error("standardized_row: covariate length mismatch");
    Eigen::VectorXd row(record.mean.size() + 1);
    row[0] = 1.0;
    for (Eigen::Index j = 0; j < record.mean.size(); ++j)
        row[j + 1] = (raw_covariates[j] - record.mean[j]) / record.sd[j];
    return row;
}

double check_loss(const Design& design, const Eigen::VectorXd& beta, double p) {
    const Eigen::VectorXd residual = design.y - design.X * beta;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
        const double u = residual[i];
        loss += u * (p - (u < 0.0 ? 1.0 : 0.0));
    }
    return loss;
}

std::pair<Eigen::Index, Eigen::Index> residual_sign_counts(const Design& design,
                                                           const Eigen::VectorXd& beta) {
    const Eigen::VectorXd residual = design.y - design.X * beta;
    Eigen::Index negative = 0;
    Eigen::Index nonpositive = 0;
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
        // Residuals pinned to zero by the solver reappear as +-1 ulp noise;
        // count within a tolerance band so they register as zeros.
        const double tol = 1e-8 * (1.0 + std::abs(design.y[i]));
        if (residual[i] < -tol) ++negative;
        if (residual[i] <= tol) ++nonpositive;
    }
    return {negative, nonpositive};
}

QuantileFit fit_quantile_regression(const Design& design, double p) {
    require_valid(design, p);
    const Eigen::Index n = design.rows();
    const Eigen::Index m = design.coefficients();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.X);
    if (qr.rank() < m)
        throw std::domain_error("fit_quantile_regression: rank-deficient design");
    Eigen::VectorXd beta = qr.solve(design.y);

    // Smoothed IRLS: check loss with |u| replaced by sqrt(u^2 + h^2), the
    // width shrinking geometrically until the smoothing is negligible. This
    // phase only needs to park beta near the optimum; the exact coordinate
    // descent below finishes the job.
    const double y_sd = std::sqrt(
        (design.y.array() - design.y.mean()).square().sum() / static_cast<double>(n - 1));
    const Eigen::VectorXd pull = (p - 0.5) * design.X.colwise().sum().transpose();
    std::vector<double> widths;
    for (double h = std::max(0.1 * y_sd, kSmoothingFloor); h > kSmoothingFloor; h /= 100.0)
        widths.push_back(h);
    widths.push_back(kSmoothingFloor);
    Eigen::MatrixXd weighted(n, m);
    for (double h : widths) {
        for (int iter = 0; iter < 25; ++iter) {
            const Eigen::VectorXd residual = design.y - design.X * beta;
            const Eigen::ArrayXd weights =
                1.0 / (2.0 * (residual.array().square() + h * h).sqrt());
            weighted.noalias() = weights.matrix().asDiagonal() * design.X;
            const Eigen::MatrixXd normal = design.X.transpose() * weighted;
            const Eigen::VectorXd rhs = weighted.transpose() * design.y + pull;
            const Eigen::VectorXd next = normal.ldlt().solve(rhs);
            const double change = (next - beta).cwiseAbs().maxCoeff();
            beta = next;
            if (change <= 1e-8 * (1.0 + beta.cwiseAbs().maxCoeff())) break;
        }
    }

    // Exact polish: cycle the coordinates (intercept last, which pins the
    // residual-sign certificate) until a pass brings no real improvement.
    // Near-tied breakpoints make the raw coordinate minimiser toggle between
    // equal-loss vertices forever, so moves must buy a margin of loss.
    Eigen::VectorXd residual = design.y - design.X * beta;
    auto loss_of = [&](const Eigen::VectorXd& u) {
        double loss = 0.0;
        for (Eigen::Index i = 0; i < u.size(); ++i)
            loss += u[i] * (p - (u[i] < 0.0 ? 1.0 : 0.0));
        return loss;
    };
    double current_loss = loss_of(residual);
    for (int cycle = 0; cycle < 60; ++cycle) {
        bool improved = false;
        for (Eigen::Index pass = 0; pass < m; ++pass) {
            const Eigen::Index j = (pass + 1) % m;  // 1..m-1 then 0
            const Eigen::VectorXd column = design.X.col(j);
            const Eigen::VectorXd without = residual + column * beta[j];
            const double updated = coordinate_minimum(without, column, p);
            if (updated == beta[j]) continue;
            const Eigen::VectorXd candidate = without - column * updated;
            const double candidate_loss = loss_of(candidate);
            if (candidate_loss < current_loss - 1e-12 * (1.0 + current_loss)) {
                residual = candidate;
                beta[j] = updated;
                current_loss = candidate_loss;
                improved = true;
            }
        }
        if (!improved) break;
    }

    return {p, beta};
}

QuantileFitBundle fit_bundle(const Design& design, int threads) {
    QuantileFitBundle bundle;
    bundle.standardization = design.standardization;
    bundle.fits.resize(99);
    parallel_for(99, threads, [&](std::size_t i) {
        const double p = static_cast<double>(i + 1) / 100.0;
        bundle.fits[i] = fit_quantile_regression(design, p);
    });
    return bundle;
}

QuantileSet predict_quantiles(const QuantileFitBundle& bundle, const Eigen::VectorXd& x0) {
    if (!x0.allFinite()) throw std::domain_error("predict_quantiles: non-finite covariates");
    const Eigen::VectorXd row = standardized_row(bundle.standardization, x0);
    std::vector<double> probabilities(bundle.fits.size());
    std::vector<double> values(bundle.fits.size());
    for (std::size_t i = 0; i < bundle.fits.size(); ++i) {
        probabilities[i] = bundle.fits[i].p;
        values[i] = bundle.fits[i].beta.dot(row);
    }
    // Separate per-probability fits may cross; rearrangement restores the
    // nondecreasing order the quantile targets need.
    std::sort(values.begin(), values.end());
    return make_quantile_set(std::move(probabilities), std::move(values));
}

FitResult distributional_fit(const QuantileFitBundle& bundle, const Eigen::VectorXd& x0,
                             const FitConfig& config) {
    FitConfig quantile_config = config;
    quantile_config.data_bracket_constraints = false;
    return fit_mq(predict_quantiles(bundle, x0), quantile_config);
}

}  // namespace fpld
