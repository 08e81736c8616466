// Linear quantile regression on a probability grid and the two-step
// distributional fit: predict conditional quantiles at a location, then fit
// the FPLD to them by the method of quantiles.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fpld/estimation.hpp"

namespace fpld {

struct Standardization {
    std::vector<std::string> names;
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
};

// Regression data with a leading intercept column; covariate columns are
// standardized to zero mean and unit standard deviation.
struct Design {
    Eigen::MatrixXd X;  // n x (k+1)
    Eigen::VectorXd y;
    Standardization standardization;

    Eigen::Index rows() const { return X.rows(); }
    Eigen::Index coefficients() const { return X.cols(); }
};

// Build a Design from raw covariate columns (n x k, no intercept). Throws
// std::domain_error naming the covariate when one has zero variance, and on
// non-finite entries.
Design standardize(const std::vector<std::string>& names, const Eigen::MatrixXd& raw_covariates,
                   Eigen::VectorXd y);

// Apply a stored standardization to a raw covariate vector, producing the
// row layout of Design::X (leading 1).
Eigen::VectorXd standardized_row(const Standardization& record,
                                 const Eigen::VectorXd& raw_covariates);

struct QuantileFit {
    double p;
    Eigen::VectorXd beta;
};

struct QuantileFitBundle {
    std::vector<QuantileFit> fits;  // p = i/100, i = 1..99, sorted
    Standardization standardization;
};

// Minimise the check loss sum_i rho_p(y_i - x_i' beta). Smoothed iteratively
// reweighted least squares refined by exact coordinate descent; the returned
// coefficients satisfy the residual-sign subgradient bounds.
QuantileFit fit_quantile_regression(const Design& design, double p);

// Value of the check loss at given coefficients.
double check_loss(const Design& design, const Eigen::VectorXd& beta, double p);

// (#strictly negative residuals, #nonpositive residuals) at beta.
std::pair<Eigen::Index, Eigen::Index> residual_sign_counts(const Design& design,
                                                           const Eigen::VectorXd& beta);

// 99 independent fits at p = 0.01 .. 0.99. Fits may cross.
QuantileFitBundle fit_bundle(const Design& design, int threads = 1);

// Conditional quantiles at a raw covariate vector, rearranged to
// nondecreasing order before the QuantileSet is formed.
QuantileSet predict_quantiles(const QuantileFitBundle& bundle, const Eigen::VectorXd& x0);

// Method-of-quantiles FPLD fit to the 99 predicted quantiles. Data-bracket
// constraints are disabled (there is no raw sample at the target location);
// the positive-support constraint follows the config.
FitResult distributional_fit(const QuantileFitBundle& bundle, const Eigen::VectorXd& x0,
                             const FitConfig& config);

}  // namespace fpld
