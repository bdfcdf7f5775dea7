#ifndef CDECOMP_GLM_HPP
#define CDECOMP_GLM_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdecomp/design.hpp"
#include "cdecomp/error.hpp"
#include "cdecomp/table.hpp"

namespace cdecomp {

struct FitOptions {
    int max_iterations = 100;
    double score_tol = 1e-8;   // convergence: max |score component|
    int max_halvings = 30;
    double separation_prob = 1e-10;
};

namespace detail {

// Center/scale bookkeeping for the expanded design. Fits run on the
// standardized matrix; coefficients are mapped back to the original scale.
struct Standardizer {
    Eigen::VectorXd mean;   // per design column (0 where not centered)
    Eigen::VectorXd scale;  // per design column (1 where not scaled)
    bool intercept = false;
    std::ptrdiff_t intercept_col = -1;

    static Standardizer fit(const Eigen::MatrixXd& X, const BoundDesign& design) {
        Standardizer s;
        const auto p = X.cols();
        s.mean = Eigen::VectorXd::Zero(p);
        s.scale = Eigen::VectorXd::Ones(p);
        s.intercept = design.has_intercept();
        for (std::ptrdiff_t j = 0; j < p; ++j) {
            if (design.column_name(j) == "(intercept)") {
                s.intercept_col = j;
                continue;
            }
            double m = X.col(j).mean();
            double var = (X.col(j).array() - m).square().sum() / std::max<double>(1.0, X.rows() - 1);
            double sd = std::sqrt(var);
            if (s.intercept) s.mean[j] = m;
            if (sd > 0.0) s.scale[j] = sd;
        }
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
        Eigen::MatrixXd Z = X;
        for (std::ptrdiff_t j = 0; j < X.cols(); ++j) {
            if (j == intercept_col) continue;
            Z.col(j) = (X.col(j).array() - mean[j]) / scale[j];
        }
        return Z;
    }

    // beta_original = T * beta_standardized
    Eigen::MatrixXd back_transform() const {
        const auto p = mean.size();
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(p, p);
        for (std::ptrdiff_t j = 0; j < p; ++j) {
            if (j == intercept_col)
                T(j, j) = 1.0;
            else
                T(j, j) = 1.0 / scale[j];
        }
        if (intercept_col >= 0) {
            for (std::ptrdiff_t j = 0; j < p; ++j) {
                if (j == intercept_col) continue;
                T(intercept_col, j) = -mean[j] / scale[j];
            }
        }
        return T;
    }
};

inline void check_rank(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
                       const BoundDesign& design, double n_rows) {
    const auto p = qr.cols();
    if (n_rows < static_cast<double>(p))
        throw EstimationError("fit: fewer rows (" + std::to_string(static_cast<long>(n_rows)) +
                              ") than design columns (" + std::to_string(p) + ")");
    if (qr.rank() == p) return;
    // Columns permuted beyond the numerical rank are the linearly dependent ones.
    const auto& perm = qr.colsPermutation().indices();
    std::string names;
    for (std::ptrdiff_t k = qr.rank(); k < p; ++k) {
        if (!names.empty()) names += ", ";
        names += design.column_name(perm[k]);
    }
    throw EstimationError("fit: design is rank deficient; dependent columns: " + names);
}

} // namespace detail

struct LinearModel {
    BoundDesign design;
    Eigen::VectorXd beta;        // original scale
    Eigen::VectorXd std_errors;  // original scale
    Eigen::MatrixXd covariance;  // original scale
    double sigma2 = 0.0;         // unbiased residual variance (rss / df)
    double rss = 0.0;
    double df = 0.0;             // n - p

    double predict(const RowView& row) const {
        thread_local std::vector<double> buf;
        buf.resize(design.n_cols());
        design.fill_row(row, buf.data());
        double v = 0.0;
        for (std::size_t j = 0; j < buf.size(); ++j) v += buf[j] * beta[j];
        return v;
    }

    // t statistic for one coefficient; used for partial-R2 benchmarking
    double t_stat(std::size_t j) const { return beta[j] / std_errors[j]; }

    std::ptrdiff_t column_index(const std::string& name) const {
        for (std::size_t j = 0; j < design.n_cols(); ++j)
            if (design.column_name(j) == name) return static_cast<std::ptrdiff_t>(j);
        return -1;
    }
};

inline LinearModel fit_linear_model(const ObservationTable& table, const std::string& response,
                                    const DesignSpec& spec) {
    LinearModel m;
    m.design = BoundDesign::bind(spec, table);
    const auto& yv = table.numeric(response);
    const std::size_t n = table.n_rows();
    const std::size_t p = m.design.n_cols();
    Eigen::MatrixXd X = m.design.matrix(table);
    Eigen::Map<const Eigen::VectorXd> y(yv.data(), n);

    auto std_ = detail::Standardizer::fit(X, m.design);
    Eigen::MatrixXd Z = std_.apply(X);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    qr.setThreshold(1e-10);
    detail::check_rank(qr, m.design, static_cast<double>(n));

    Eigen::VectorXd beta_z = qr.solve(y);
    Eigen::VectorXd fitted = Z * beta_z;
    Eigen::VectorXd resid = y - fitted;
    m.rss = resid.squaredNorm();
    m.df = static_cast<double>(n) - static_cast<double>(p);
    if (m.df <= 0.0) throw EstimationError("fit: no residual degrees of freedom");
    m.sigma2 = m.rss / m.df;

    // (Z'Z)^-1 from the thin R factor, respecting the column pivoting
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    Eigen::MatrixXd Rinv = R.inverse();
    Eigen::MatrixXd XtXinv_p = Rinv * Rinv.transpose();
    Eigen::MatrixXd P = qr.colsPermutation();
    Eigen::MatrixXd XtXinv = P * XtXinv_p * P.transpose();

    Eigen::MatrixXd T = std_.back_transform();
    m.beta = T * beta_z;
    m.covariance = m.sigma2 * (T * XtXinv * T.transpose());
    m.std_errors = m.covariance.diagonal().array().sqrt();
    return m;
}

struct ConvergenceReport {
    bool converged = false;
    int iterations = 0;
    double final_score_max = std::numeric_limits<double>::infinity();
    std::vector<double> ll_trace;
};

// Log-likelihood of a baseline-category logit. coef is (K-1) x p; level 0 is
// the baseline. Exposed so tests can difference it numerically.
inline double multinomial_log_likelihood(const Eigen::MatrixXd& X,
                                         const std::vector<std::int32_t>& y, std::size_t k_levels,
                                         const Eigen::MatrixXd& coef) {
    const std::size_t n = X.rows();
    Eigen::MatrixXd eta = X * coef.transpose(); // n x (K-1)
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = 0.0;
        for (std::size_t l = 0; l + 1 < k_levels; ++l) mx = std::max(mx, eta(i, l));
        double denom = std::exp(-mx);
        for (std::size_t l = 0; l + 1 < k_levels; ++l) denom += std::exp(eta(i, l) - mx);
        double log_denom = mx + std::log(denom);
        double num = (y[i] == 0) ? 0.0 : eta(i, y[i] - 1);
        ll += num - log_denom;
    }
    return ll;
}

struct MultinomialModel {
    BoundDesign design;
    std::vector<std::string> levels; // response levels; index 0 is the baseline
    Eigen::MatrixXd coef;            // (K-1) x p, original scale
    ConvergenceReport report;

    void probabilities(const RowView& row, double* out) const {
        thread_local std::vector<double> buf;
        const std::size_t p = design.n_cols();
        const std::size_t km1 = levels.size() - 1;
        buf.resize(p);
        design.fill_row(row, buf.data());
        double mx = 0.0;
        thread_local std::vector<double> eta;
        eta.resize(km1);
        for (std::size_t l = 0; l < km1; ++l) {
            double e = 0.0;
            for (std::size_t j = 0; j < p; ++j) e += buf[j] * coef(l, j);
            eta[l] = e;
            mx = std::max(mx, e);
        }
        double denom = std::exp(-mx);
        for (std::size_t l = 0; l < km1; ++l) denom += std::exp(eta[l] - mx);
        out[0] = std::exp(-mx) / denom;
        for (std::size_t l = 0; l < km1; ++l) out[l + 1] = std::exp(eta[l] - mx) / denom;
    }

    std::vector<double> probabilities(const RowView& row) const {
        std::vector<double> out(levels.size());
        probabilities(row, out.data());
        return out;
    }
};

// Newton-Raphson with step-halving from an all-zero start. Converges when the
// largest score component falls below score_tol.
inline MultinomialModel fit_multinomial_logit(const ObservationTable& table,
                                              const std::string& response, const DesignSpec& spec,
                                              const FitOptions& opt = {}) {
    MultinomialModel m;
    m.design = BoundDesign::bind(spec, table);
    const auto& resp = table.categorical(response);
    const std::size_t n = table.n_rows();
    const std::size_t p = m.design.n_cols();
    const std::size_t K = resp.levels.size();
    if (K < 2) throw EstimationError("fit: response '" + response + "' has fewer than 2 levels");
    const std::size_t km1 = K - 1;
    m.levels = resp.levels;

    Eigen::MatrixXd X = m.design.matrix(table);
    auto std_ = detail::Standardizer::fit(X, m.design);
    Eigen::MatrixXd Z = std_.apply(X);
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
        qr.setThreshold(1e-10);
        detail::check_rank(qr, m.design, static_cast<double>(n));
    }

    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(km1, p); // standardized-scale coefficients
    Eigen::MatrixXd probs(n, K);
    auto compute_probs = [&](const Eigen::MatrixXd& beta) {
        Eigen::MatrixXd eta = Z * beta.transpose(); // n x (K-1)
        for (std::size_t i = 0; i < n; ++i) {
            double mx = 0.0;
            for (std::size_t l = 0; l < km1; ++l) mx = std::max(mx, eta(i, l));
            double denom = std::exp(-mx);
            for (std::size_t l = 0; l < km1; ++l) denom += std::exp(eta(i, l) - mx);
            probs(i, 0) = std::exp(-mx) / denom;
            for (std::size_t l = 0; l < km1; ++l) probs(i, l + 1) = std::exp(eta(i, l) - mx) / denom;
        }
    };
    auto log_lik = [&](const Eigen::MatrixXd& beta) {
        return multinomial_log_likelihood(Z, resp.codes, K, beta);
    };

    double ll = log_lik(B);
    compute_probs(B);
    Eigen::VectorXd score(km1 * p);
    Eigen::MatrixXd neg_hessian(km1 * p, km1 * p);
    double last_decrement = -1.0;

    auto fill_score = [&] {
        for (std::size_t l = 0; l < km1; ++l) {
            Eigen::VectorXd resid = -probs.col(l + 1);
            for (std::size_t i = 0; i < n; ++i)
                if (resp.codes[i] == static_cast<std::int32_t>(l + 1)) resid[i] += 1.0;
            score.segment(l * p, p) = Z.transpose() * resid;
        }
    };

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        fill_score();
        m.report.final_score_max = score.cwiseAbs().maxCoeff();
        m.report.iterations = iter;
        if (m.report.final_score_max < opt.score_tol) {
            m.report.converged = true;
            break;
        }
        if (probs.minCoeff() < opt.separation_prob)
            throw SeparationError("fit: quasi-complete separation in '" + response +
                                  "' model (fitted probability below 1e-10 before convergence)");

        for (std::size_t l = 0; l < km1; ++l) {
            for (std::size_t l2 = l; l2 < km1; ++l2) {
                Eigen::ArrayXd w = probs.col(l + 1).array() *
                                   ((l == l2 ? 1.0 : 0.0) - probs.col(l2 + 1).array());
                Eigen::MatrixXd block = Z.transpose() * w.matrix().asDiagonal() * Z;
                neg_hessian.block(l * p, l2 * p, p, p) = block;
                if (l2 != l) neg_hessian.block(l2 * p, l * p, p, p) = block.transpose();
            }
        }
        Eigen::VectorXd step = neg_hessian.ldlt().solve(score);
        // The attainable log-likelihood gain from here is about half the
        // Newton decrement. Once that drops below the double-precision
        // resolution of ll itself, no computable step can improve the fit:
        // treat the current point as the optimum even if the raw score is
        // still above score_tol.
        const double decrement = score.dot(step);
        last_decrement = decrement;
        if (decrement < 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ll))) {
            m.report.converged = true;
            break;
        }

        double step_scale = 1.0;
        bool improved = false;
        Eigen::MatrixXd B_try;
        for (int h = 0; h <= opt.max_halvings; ++h) {
            B_try = B;
            for (std::size_t l = 0; l < km1; ++l)
                B_try.row(l) += step_scale * step.segment(l * p, p).transpose();
            double ll_try = log_lik(B_try);
            if (ll_try >= ll || !std::isfinite(ll)) {
                B = B_try;
                ll = ll_try;
                improved = true;
                break;
            }
            step_scale *= 0.5;
        }
        m.report.ll_trace.push_back(ll);
        if (!improved) break; // no ascent direction left; convergence check decides below
        compute_probs(B);
    }

    if (!m.report.converged) {
        fill_score();
        m.report.final_score_max = score.cwiseAbs().maxCoeff();
        // Line-search stall rescue. Summing n log-probability terms leaves
        // rounding noise of order n*eps*|ll| in every ll evaluation; once the
        // attainable Newton gain drops below that, no step can be certified
        // as an improvement and the iteration jiggles in place. The fit is
        // then at its numerical optimum even though the raw score tolerance
        // was never reached.
        const double ll_noise = std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ll)) *
                                (64.0 + static_cast<double>(n));
        if (m.report.final_score_max >= opt.score_tol && last_decrement >= 0.0 &&
            last_decrement < ll_noise) {
            m.report.converged = true;
        }
        if (m.report.final_score_max >= opt.score_tol && !m.report.converged) {
            std::ostringstream msg;
            if (probs.minCoeff() < opt.separation_prob)
                throw SeparationError("fit: quasi-complete separation in '" + response +
                                      "' model (fitted probability below 1e-10 before convergence)");
            msg << "fit: '" << response << "' model did not converge in " << opt.max_iterations
                << " iterations; max |score| = " << m.report.final_score_max << "; ll trace:";
            std::size_t start = m.report.ll_trace.size() > 10 ? m.report.ll_trace.size() - 10 : 0;
            for (std::size_t t = start; t < m.report.ll_trace.size(); ++t)
                msg << " " << m.report.ll_trace[t];
            throw ConvergenceError(msg.str());
        }
        m.report.converged = true;
    }

    Eigen::MatrixXd T = std_.back_transform();
    m.coef = B * T.transpose(); // row l: T * B.row(l)'
    return m;
}

} // namespace cdecomp

#endif
