#pragma once
// CMA-ES (CSA step-size control, rank-1 + rank-mu covariance update) for
// fixed-topology parameter refinement. The search runs in normalized
// log-parameter space [0,1]^n; degenerate covariance triggers a restart with
// a larger step size, sharing the evaluation budget.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crnswarm/evaluator.hpp"
#include "crnswarm/genome.hpp"
#include "crnswarm/rng.hpp"

namespace crnswarm {

struct CmaesOptions {
    long budget = 2000;
    double sigma0 = 0.3;  // fraction of the normalized (log-range) box
    int lambda = 0;       // 0 = default 4 + floor(3 ln n)
    double sigma_stop = 1e-12;
    double cond_limit = 1e14;
    int max_restarts = 10;
    std::function<void(const std::string&)> event_sink;
};

struct CmaesResult {
    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();
    long evaluations = 0;
    int restarts = 0;
};

/// Minimizes `objective` over [0,1]^n starting from x0 (clamped samples are
/// what the objective sees; the distribution itself is unconstrained).
inline CmaesResult cma_es_minimize(const std::function<double(const std::vector<double>&)>& objective,
                                   const std::vector<double>& x0, const CmaesOptions& opt, Rng& rng) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const int n = static_cast<int>(x0.size());
    if (n < 1) throw std::invalid_argument("cma_es_minimize: empty parameter vector");

    const int lambda = opt.lambda > 0 ? opt.lambda : 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
    const int mu = lambda / 2;
    VectorXd weights(mu);
    for (int i = 0; i < mu; ++i) weights(i) = std::log(mu + 0.5) - std::log(i + 1.0);
    weights /= weights.sum();
    const double mueff = 1.0 / weights.squaredNorm();

    const double cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
    const double cs = (mueff + 2.0) / (n + mueff + 5.0);
    const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
    const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) * (n + 2.0) + mueff));
    const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
    const double chi_n = std::sqrt(static_cast<double>(n)) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    CmaesResult result;
    VectorXd start = Eigen::Map<const VectorXd>(x0.data(), n);
    double sigma0 = opt.sigma0;

    auto clamped_eval = [&](const VectorXd& x) {
        std::vector<double> v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = std::clamp(x(i), 0.0, 1.0);
        const double f = objective(v);
        ++result.evaluations;
        if (f < result.best_f) {
            result.best_f = f;
            result.best_x = v;
        }
        return f;
    };

    for (int restart = 0; restart <= opt.max_restarts && result.evaluations < opt.budget; ++restart) {
        VectorXd mean = restart == 0 || result.best_x.empty()
                            ? start
                            : Eigen::Map<const VectorXd>(result.best_x.data(), n);
        double sigma = sigma0;
        MatrixXd C = MatrixXd::Identity(n, n);
        MatrixXd B = MatrixXd::Identity(n, n);
        VectorXd D = VectorXd::Ones(n);
        VectorXd pc = VectorXd::Zero(n), ps = VectorXd::Zero(n);
        long gen = 0;
        long last_eigen_eval = 0;
        const long eigen_interval = std::max<long>(1, static_cast<long>(1.0 / ((c1 + cmu) * n * 10.0)));
        bool degenerate = false;

        while (result.evaluations < opt.budget && !degenerate) {
            const long remaining = opt.budget - result.evaluations;
            if (remaining < lambda) {
                // final partial generation: spend the tail on extra samples
                for (long k = 0; k < remaining; ++k) {
                    VectorXd z(n);
                    for (int i = 0; i < n; ++i) z(i) = rng.gaussian();
                    clamped_eval(mean + sigma * (B * (D.asDiagonal() * z)));
                }
                break;
            }

            std::vector<VectorXd> ys(static_cast<std::size_t>(lambda));
            std::vector<VectorXd> xs(static_cast<std::size_t>(lambda));
            std::vector<double> fs(static_cast<std::size_t>(lambda));
            for (int k = 0; k < lambda; ++k) {
                VectorXd z(n);
                for (int i = 0; i < n; ++i) z(i) = rng.gaussian();
                ys[static_cast<std::size_t>(k)] = B * (D.asDiagonal() * z);
                xs[static_cast<std::size_t>(k)] = mean + sigma * ys[static_cast<std::size_t>(k)];
                fs[static_cast<std::size_t>(k)] = clamped_eval(xs[static_cast<std::size_t>(k)]);
            }
            std::vector<int> order(static_cast<std::size_t>(lambda));
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return fs[static_cast<std::size_t>(a)] < fs[static_cast<std::size_t>(b)];
            });

            const VectorXd old_mean = mean;
            mean.setZero();
            for (int i = 0; i < mu; ++i) mean += weights(i) * xs[static_cast<std::size_t>(order[i])];
            const VectorXd shift = (mean - old_mean) / sigma;

            // C^(-1/2) * shift via the cached eigendecomposition
            const VectorXd c_inv_shift = B * (D.cwiseInverse().asDiagonal() * (B.transpose() * shift));
            ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * c_inv_shift;
            ++gen;
            const double ps_norm = ps.norm();
            const bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * gen)) / chi_n <
                              1.4 + 2.0 / (n + 1.0);
            pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * shift;

            MatrixXd rank_mu = MatrixXd::Zero(n, n);
            for (int i = 0; i < mu; ++i) {
                const VectorXd& y = ys[static_cast<std::size_t>(order[i])];
                rank_mu += weights(i) * (y * y.transpose());
            }
            C = (1.0 - c1 - cmu) * C +
                c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * C) + cmu * rank_mu;
            sigma *= std::exp((cs / damps) * (ps_norm / chi_n - 1.0));

            if (gen - last_eigen_eval >= eigen_interval) {
                last_eigen_eval = gen;
                C = (C + C.transpose()) / 2.0;  // enforce symmetry
                Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C);
                if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0 ||
                    !eig.eigenvalues().allFinite()) {
                    degenerate = true;
                } else {
                    D = eig.eigenvalues().cwiseSqrt();
                    B = eig.eigenvectors();
                    if (D.maxCoeff() / D.minCoeff() > std::sqrt(opt.cond_limit)) degenerate = true;
                }
            }
            if (!std::isfinite(sigma) || sigma * D.maxCoeff() < opt.sigma_stop || sigma > 1e6) degenerate = true;
        }

        if (!degenerate) break;
        sigma0 = std::min(1.0, sigma0 * 2.0);  // restart wider
        ++result.restarts;
        if (opt.event_sink)
            opt.event_sink("cma-es restart " + std::to_string(result.restarts) + " (degenerate covariance), sigma0=" +
                           std::to_string(sigma0));
    }
    return result;
}

namespace detail {

inline double to_unit_log(double v, double lo, double hi) {
    return std::log(std::clamp(v, lo, hi) / lo) / std::log(hi / lo);
}

inline double from_unit_log(double u, double lo, double hi) { return lo * std::pow(hi / lo, u); }

}  // namespace detail

struct RefineResult {
    CrnGenome genome;
    double fitness = -std::numeric_limits<double>::infinity();
    long evaluations = 0;
    int restarts = 0;
};

/// Refines the parameters of a fixed topology: CMA-ES over the genome's
/// evolvable parameters in normalized log space, mean initialized at the
/// incumbent. Evaluations use indices first_eval, first_eval+1, ... and are
/// appended to `log` when given.
inline RefineResult cmaes_refine(const CrnGenome& incumbent, const EvaluatorBase& evaluator, EvalLog* log,
                                 const CmaesOptions& opt, std::uint64_t master_seed, int run_index, long first_eval,
                                 ModelKind model = ModelKind::full) {
    const std::vector<ParamRef> refs = evolvable_parameters(incumbent);
    if (refs.empty()) throw std::invalid_argument("cmaes_refine: genome has no evolvable parameters");
    const ParamBounds bounds;  // shared defaults; injection clamps regardless

    const std::vector<double> raw = extract_parameters(incumbent);
    std::vector<double> x0(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto [lo, hi] = param_bounds_for(refs[i].kind, bounds);
        x0[i] = detail::to_unit_log(raw[i], lo, hi);
    }

    auto materialize = [&](const std::vector<double>& x) {
        std::vector<double> values(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto [lo, hi] = param_bounds_for(refs[i].kind, bounds);
            values[i] = detail::from_unit_log(std::clamp(x[i], 0.0, 1.0), lo, hi);
        }
        return inject_parameters(incumbent, values, bounds).genome;
    };

    long next_eval = first_eval;
    auto objective = [&](const std::vector<double>& x) {
        const CrnGenome g = materialize(x);
        const EvalRecord rec = evaluator.evaluate(g, next_eval++, model);
        if (log) log->add(rec);
        return -rec.outcome.fitness;  // maximize fitness
    };

    Rng rng(derive_seed(master_seed, {seed_stream::refine, static_cast<std::uint64_t>(run_index),
                                      static_cast<std::uint64_t>(first_eval)}));
    const CmaesResult res = cma_es_minimize(objective, x0, opt, rng);

    RefineResult out;
    out.genome = res.best_x.empty() ? incumbent : materialize(res.best_x);
    out.fitness = -res.best_f;
    out.evaluations = res.evaluations;
    out.restarts = res.restarts;
    return out;
}

}  // namespace crnswarm
