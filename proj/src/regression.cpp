#include "svpde/regression.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "svpde/error.hpp"

namespace svpde {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Column sums of the selected rows, blockwise in a fixed order.
VectorXd blocked_column_sums(const MatrixXd& a, int stride) {
    VectorXd acc = VectorXd::Zero(a.cols());
    for (Index r = 0; r < a.rows(); r += stride) acc += a.row(r).transpose();
    return acc;
}

}  // namespace

LeastSquares::LeastSquares(const MatrixXd& design, const MatrixXd& rhs, const LeastSquaresOptions& options) {
    const Index rows = design.rows();
    const int stride = std::max(1, options.subsample);
    if (rhs.rows() != rows) throw ShapeError("LeastSquares: design and right-hand side differ in rows");
    const Index fit_rows = (rows + stride - 1) / stride;
    if (fit_rows < 1) throw ShapeError("LeastSquares: no rows to fit");

    // standardize, dropping columns that are constant on the fitting rows
    const VectorXd mean = blocked_column_sums(design, stride) / static_cast<double>(fit_rows);
    std::vector<Index> keep;
    std::vector<double> scale;
    for (Index j = 0; j < design.cols(); ++j) {
        double ss = 0.0;
        for (Index r = 0; r < rows; r += stride) ss += (design(r, j) - mean(j)) * (design(r, j) - mean(j));
        const double sd = std::sqrt(ss / static_cast<double>(fit_rows));
        if (sd > 1e-12 * (1.0 + std::abs(mean(j)))) {
            keep.push_back(j);
            scale.push_back(sd);
        }
    }
    active_ = static_cast<int>(keep.size());
    const Index B = active_ + 1;

    MatrixXd x(rows, B);
    x.col(0).setOnes();
    for (Index c = 0; c < active_; ++c)
        x.col(c + 1) = (design.col(keep[c]).array() - mean(keep[c])) / scale[c];

    // normal equations accumulated over fixed row blocks
    const Index n_blocks = (rows + kBlockRows - 1) / kBlockRows;
    std::vector<MatrixXd> gram(n_blocks), cross(n_blocks);
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < n_blocks; ++b) {
        const Index r0 = b * kBlockRows, r1 = std::min(rows, r0 + kBlockRows);
        MatrixXd g = MatrixXd::Zero(B, B), h = MatrixXd::Zero(B, rhs.cols());
        for (Index r = r0; r < r1; ++r) {
            if (r % stride) continue;
            g.selfadjointView<Eigen::Lower>().rankUpdate(x.row(r).transpose());
            h.noalias() += x.row(r).transpose() * rhs.row(r);
        }
        gram[b] = std::move(g);
        cross[b] = std::move(h);
    }
    MatrixXd G = MatrixXd::Zero(B, B), H = MatrixXd::Zero(B, rhs.cols());
    for (Index b = 0; b < n_blocks; ++b) {
        G += gram[b];
        H += cross[b];
    }
    G = G.selfadjointView<Eigen::Lower>();

    ridge_ = options.ridge < 0.0 ? 1e-8 * G.trace() / static_cast<double>(B) : options.ridge;
    MatrixXd beta;
    if (ridge_ == 0.0) {
        Eigen::ColPivHouseholderQR<MatrixXd> qr(G);
        if (qr.rank() < B)
            throw NumericalError("LeastSquares: normal equations are rank deficient (rank " + std::to_string(qr.rank()) +
                                 " of " + std::to_string(B) + "); use a ridge parameter > 0");
        beta = qr.solve(H);
    } else {
        // the intercept is not penalised
        G.diagonal().tail(B - 1).array() += ridge_;
        Eigen::LLT<MatrixXd> llt(G);
        if (llt.info() == Eigen::Success) {
            beta = llt.solve(H);
        } else {
            beta = Eigen::ColPivHouseholderQR<MatrixXd>(G).solve(H);
        }
    }
    if (!beta.allFinite()) throw NumericalError("LeastSquares: non-finite regression coefficients");
    fitted_ = x * beta;
}

}  // namespace svpde
