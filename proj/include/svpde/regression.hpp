#pragma once

#include <Eigen/Dense>

namespace svpde {

/// Ordinary (ridge) least squares of several right-hand sides on a common design matrix.
///
/// Non-constant columns are standardized and zero-variance columns are dropped; an intercept is
/// always included. Gram and cross products are accumulated in fixed row blocks and summed in
/// block order, so the fit does not depend on the worker count.
struct LeastSquaresOptions {
    /// < 0: default 1e-8 * trace(G) / B; 0: plain normal equations (rank deficiency is an error).
    double ridge = -1.0;
    /// Fit on rows with index % subsample == 0 only; fitted values are produced for all rows.
    int subsample = 1;
};

class LeastSquares {
public:
    static constexpr Eigen::Index kBlockRows = 4096;

    /// Fits rhs (rows x m) on design (rows x B, without intercept). Throws NumericalError when
    /// the normal equations are rank deficient and ridge == 0.
    LeastSquares(const Eigen::MatrixXd& design, const Eigen::MatrixXd& rhs, const LeastSquaresOptions& options = {});

    /// Fitted values for every row of the design used at construction.
    const Eigen::MatrixXd& fitted() const noexcept { return fitted_; }
    /// Columns kept after dropping constant ones (excluding the intercept).
    int active_columns() const noexcept { return active_; }
    double ridge() const noexcept { return ridge_; }

private:
    Eigen::MatrixXd fitted_;
    int active_ = 0;
    double ridge_ = 0.0;
};

}  // namespace svpde
