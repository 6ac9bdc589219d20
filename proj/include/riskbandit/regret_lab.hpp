#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "riskbandit/arm_models.hpp"
#include "riskbandit/empirical_stats.hpp"
#include "riskbandit/errors.hpp"
#include "riskbandit/ralcb_policy.hpp"
#include "riskbandit/risk_measures.hpp"
#include "riskbandit/rng.hpp"

namespace riskbandit {

struct EpisodeStep {
    std::uint64_t t;   ///< 1-based time step
    std::size_t arm;   ///< 0-based chosen arm
    double cost;
};

/// Realized (t, I_t, x_{I_t,t}) sequence of one policy run.
struct EpisodeTrace {
    std::vector<EpisodeStep> steps;
    std::uint64_t seed = 0;
};

/// RA-LCB is the subject of the lab; the uniform-random and always-optimal
/// baselines exist to calibrate the regret estimate itself.
enum class PolicyKind { RaLcb, UniformRandom, OracleArm };

/// Run one seeded episode of n pulls. Deterministic in (arms, spec, delta,
/// n, seed); the first K steps of RA-LCB are round-robin.
inline EpisodeTrace run_episode(std::span<const ArmModel> arms, const RiskSpec& spec,
                                double delta, std::uint64_t n, std::uint64_t seed,
                                PolicyKind policy = PolicyKind::RaLcb,
                                std::size_t forced_arm = 0) {
    const std::size_t K = arms.size();
    if (K < 2) throw BadConfig("arms: at least 2 arms required");
    if (n < K) throw BadConfig("horizon: n must be at least the arm count");
    if (policy == PolicyKind::OracleArm && forced_arm >= K)
        throw BadConfig("policy: forced arm out of range");

    PolicyState state(K, spec, delta);
    Xoshiro256PlusPlus rng(seed);
    EpisodeTrace trace;
    trace.seed = seed;
    trace.steps.reserve(n);
    for (std::uint64_t t = 1; t <= n; ++t) {
        std::size_t arm = 0;
        switch (policy) {
        case PolicyKind::RaLcb:
            arm = state.select_arm();
            break;
        case PolicyKind::UniformRandom:
            arm = std::min(static_cast<std::size_t>(rng.next_double() * K), K - 1);
            break;
        case PolicyKind::OracleArm:
            arm = forced_arm;
            break;
        }
        const double cost = arms[arm].sample(rng);
        state.update(arm, cost);
        trace.steps.push_back({t, arm, cost});
    }
    return trace;
}

/// T_k(n) for every arm; sums to the trace length.
inline std::vector<std::uint64_t> pull_counts(const EpisodeTrace& trace, std::size_t K) {
    std::vector<std::uint64_t> counts(K, 0);
    for (const auto& step : trace.steps) counts.at(step.arm) += 1;
    return counts;
}

namespace detail {

/// Run f(r) for r in [0, R) on `threads` workers; results land in replication
/// order, so reductions are identical regardless of scheduling.
template <typename T, typename F>
std::vector<T> map_replications(std::uint64_t count, unsigned threads, F&& f) {
    std::vector<T> results(count);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count ? count : 1)));
    if (threads == 1) {
        for (std::uint64_t r = 0; r < count; ++r) results[r] = f(r);
        return results;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> failures(threads);
    const std::uint64_t chunk = (count + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::uint64_t lo = w * chunk;
        const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, count);
        if (lo >= hi) break;
        workers.emplace_back([&, lo, hi, w] {
            try {
                for (std::uint64_t r = lo; r < hi; ++r) results[r] = f(r);
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& worker : workers) worker.join();
    for (const auto& failure : failures)
        if (failure) std::rethrow_exception(failure);
    return results;
}

} // namespace detail

/// One replication's pseudo-regret sample and final pull counts.
struct RegretSample {
    double regret = 0.0;
    std::vector<std::uint64_t> pulls;
};

/// Pooled-sequence regret samples over R replications. Replication r uses
/// the independent stream replication_seed(base_seed, r); the regret sample
/// is empirical_risk(pooled costs) minus the oracle risk of the optimal arm.
inline std::vector<RegretSample> run_replications(std::span<const ArmModel> arms,
                                                  const RiskSpec& spec, double delta,
                                                  std::uint64_t n, std::uint64_t replications,
                                                  std::uint64_t base_seed, unsigned threads = 1,
                                                  PolicyKind policy = PolicyKind::RaLcb) {
    std::vector<double> risks(arms.size());
    for (std::size_t k = 0; k < arms.size(); ++k) risks[k] = true_risk(arms[k], spec);
    std::size_t best = 0;
    for (std::size_t k = 1; k < risks.size(); ++k)
        if (risks[k] < risks[best]) best = k;
    for (std::size_t k = 0; k < risks.size(); ++k)
        if (k != best && std::abs(risks[k] - risks[best]) <= 1e-12)
            throw NonUniqueOptimum("two arms tie in oracle risk; the optimal arm must be unique");
    const double optimal_risk = risks[best];

    return detail::map_replications<RegretSample>(
        replications, threads, [&](std::uint64_t r) {
            const auto trace = run_episode(arms, spec, delta, n,
                                           replication_seed(base_seed, r), policy, best);
            SampleBuffer pooled;
            for (const auto& step : trace.steps) pooled.push(step.cost);
            RegretSample sample;
            sample.regret = empirical_risk(pooled, spec) - optimal_risk;
            sample.pulls = pull_counts(trace, arms.size());
            return sample;
        });
}

struct RegretEstimate {
    double mean = 0.0;
    double se = 0.0;
};

/// Monte Carlo estimate of the pseudo regret E rho_hat_{phi,n} - rho_{k*}.
inline RegretEstimate pseudo_regret(std::span<const ArmModel> arms, const RiskSpec& spec,
                                    double delta, std::uint64_t n, std::uint64_t replications,
                                    std::uint64_t base_seed, unsigned threads = 1,
                                    PolicyKind policy = PolicyKind::RaLcb) {
    if (replications < 2) throw BadConfig("replications: at least 2 required");
    const auto samples =
        run_replications(arms, spec, delta, n, replications, base_seed, threads, policy);
    double mean = 0.0;
    for (const auto& s : samples) mean += s.regret;
    mean /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (const auto& s : samples) ss += (s.regret - mean) * (s.regret - mean);
    const double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(samples.size()))};
}

// ---------------------------------------------------------------------------
// Theoretical bound evaluators. Gap vectors hold the suboptimal arms only;
// the optimal arm's zero gap would make every denominator degenerate.
// ---------------------------------------------------------------------------

/// Pull-count budget M_k(n) of one suboptimal CVaR arm.
inline double cvar_pull_budget(std::uint64_t n, std::size_t K, double delta, double alpha,
                               double M, double m_alpha, double gap) {
    const double nd = static_cast<double>(n);
    const double Kd = static_cast<double>(K);
    const double inv = 1.0 / (1.0 - alpha);
    const double denominator = gap - inv * (4.0 * delta / (nd * nd * Kd)) * M;
    if (!(denominator > 0.0))
        throw DegenerateGap("CVaR pull budget: gap does not clear the bias term");
    const double numerator = 2.0 * (1.0 + inv) * m_alpha + inv * M;
    const double ratio = numerator / denominator;
    return 2.0 * std::log(2.0 * nd * nd * Kd / delta) * ratio * ratio + 3.0 * delta;
}

/// Pseudo-regret upper bound for CVaR. The O(log n / n) constant inside
/// M_phi(n) is instantiated as the explicit suboptimal pull budget
/// (sum of M_k(n)) / n.
inline double bound_cvar(std::uint64_t n, std::size_t K, double delta, double alpha, double M,
                         double m_alpha, std::span<const double> suboptimal_gaps) {
    const double nd = static_cast<double>(n);
    const double inv = 1.0 / (1.0 - alpha);
    double budget_sum = 0.0;
    double weighted_sum = 0.0;
    double max_gap = 0.0;
    for (double gap : suboptimal_gaps) {
        const double budget = cvar_pull_budget(n, K, delta, alpha, M, m_alpha, gap);
        budget_sum += budget;
        weighted_sum += budget * (M + gap);
        max_gap = std::max(max_gap, gap);
    }
    const double m_phi = std::max(alpha, 1.0 - alpha) * (budget_sum / nd) * m_alpha +
                         2.0 * m_alpha * std::sqrt(std::log(4.0 * nd / delta) / (2.0 * nd));
    const double main_term = m_phi + inv * weighted_sum / nd;
    const double tail_term = (inv + 1.0) * M + inv * max_gap;
    return (1.0 - 4.0 * delta / nd) * main_term + (4.0 * delta / nd) * tail_term;
}

/// Pull-budget constant m_k of one suboptimal MD arm (uses the MD risk gap).
inline double md_pull_coefficient(double M, double p, double md_gap) {
    const double scale = 2.0 * M * (1.0 + std::pow(1.0 + p, 1.0 / p));
    const double ratio = md_gap / scale;
    const double clamped = std::min({1.0, ratio, std::pow(ratio, p)});
    if (!(clamped > 0.0))
        throw DegenerateGap("MD pull coefficient: gap must be positive");
    return 1.0 / (clamped * clamped);
}

/// Pseudo-regret upper bound for mean-deviation. md_gaps are the suboptimal
/// MD risk gaps (they drive the pull budgets); mean_gaps are the suboptimal
/// |mu_k - mu_{k*}| gaps the bound's prefactor uses.
inline double bound_md(std::uint64_t n, std::size_t K, double delta, double M, double p,
                       double gamma, std::span<const double> md_gaps,
                       std::span<const double> mean_gaps) {
    const double nd = static_cast<double>(n);
    const double Kd = static_cast<double>(K);
    const double log_term = std::log(4.0 * nd * nd * Kd / delta);
    double n_phi = static_cast<double>(K - 1) * delta;
    for (double gap : md_gaps)
        n_phi += (1.0 - delta / nd) * md_pull_coefficient(M, p, gap) * log_term;
    if (!(n_phi < nd))
        throw DegenerateGap("MD bound: suboptimal pull budget exceeds the horizon");
    double max_mean_gap = 0.0;
    for (double gap : mean_gaps) max_mean_gap = std::max(max_mean_gap, gap);
    const double prefactor = max_mean_gap + 2.0 * gamma * p * std::pow(M, p);
    return prefactor * n_phi / nd +
           M * (delta / nd +
                (1.0 - delta / nd) * std::sqrt(log_term / (2.0 * (nd - n_phi))));
}

/// Pull budget of one suboptimal shortfall arm.
inline double shortfall_pull_budget(std::uint64_t n, std::size_t K, double delta, double M_l,
                                    double M_G, double gap) {
    if (!(gap > 0.0)) throw DegenerateGap("shortfall pull budget: gap must be positive");
    const double nd = static_cast<double>(n);
    const double Kd = static_cast<double>(K);
    return 8.0 * M_l * M_G / gap * std::log(4.0 * nd * nd * Kd / delta);
}

/// Deterministic proxy for T_{k*}(n): the horizon minus every suboptimal
/// arm's pull budget, floored at 1.
inline std::uint64_t shortfall_t_star(std::uint64_t n, std::size_t K, double delta, double M_l,
                                      double M_G, std::span<const double> gaps) {
    double budget = 0.0;
    for (double gap : gaps)
        budget += std::ceil(shortfall_pull_budget(n, K, delta, M_l, M_G, gap));
    const double remaining = static_cast<double>(n) - budget;
    return remaining >= 1.0 ? static_cast<std::uint64_t>(remaining) : 1;
}

/// Pseudo-regret upper bound for shortfall, evaluated at a pull-count proxy
/// t_star for the optimal arm.
inline double bound_shortfall(std::uint64_t n, std::size_t K, double delta, double M,
                              double M_l, double M_G, double m_l,
                              std::span<const double> gaps, std::uint64_t t_star) {
    const double nd = static_cast<double>(n);
    const double Kd = static_cast<double>(K);
    const double log_term = std::log(4.0 * nd * nd * Kd / delta);
    double suboptimal_term = 0.0;
    for (double gap : gaps) {
        if (!(gap > 0.0)) throw DegenerateGap("shortfall bound: gap must be positive");
        suboptimal_term += 8.0 * M_l * M_l * M_G / (nd * m_l * gap) * log_term;
    }
    const double optimal_term =
        2.0 * M_l * M_G * std::sqrt(log_term / (2.0 * static_cast<double>(t_star)));
    return (1.0 - delta / nd) * (suboptimal_term + optimal_term) + (delta / nd) * M;
}

/// Regret upper bound matching the risk kind, assembled from the oracle
/// table. Empty when the guard conditions fail at these inputs or the risk
/// is the neutral mean, which has no bound evaluator.
inline std::optional<double> theoretical_bound(const OracleTable& table, const RiskSpec& spec,
                                               std::uint64_t n, std::size_t K) {
    std::vector<double> gaps;
    for (std::size_t k = 0; k < table.arms.size(); ++k)
        if (k != table.optimal_arm) gaps.push_back(table.arms[k].gap);
    const double M = spec.bounds.support_bound;
    try {
        switch (spec.kind) {
        case RiskKind::Mean:
            return std::nullopt;
        case RiskKind::CVaR:
            return bound_cvar(n, K, spec.bounds.delta, spec.alpha, M,
                              spec.bounds.quantile_density_bound.value_or(*table.m_alpha),
                              gaps);
        case RiskKind::MeanDeviation: {
            std::vector<double> mean_gaps;
            for (std::size_t k = 0; k < table.means.size(); ++k)
                if (k != table.optimal_arm)
                    mean_gaps.push_back(std::abs(table.means[k] - table.means[table.optimal_arm]));
            return bound_md(n, K, spec.bounds.delta, M, spec.p, spec.gamma, gaps, mean_gaps);
        }
        case RiskKind::Shortfall: {
            const double M_l = spec.bounds.loss_magnitude.value_or(table.loss_constants->magnitude);
            const double M_G =
                spec.bounds.shortfall_sensitivity.value_or(*table.shortfall_m_g);
            const double m_l = table.loss_constants->derivative_floor;
            const auto t_star = shortfall_t_star(n, K, spec.bounds.delta, M_l, M_G, gaps);
            return bound_shortfall(n, K, spec.bounds.delta, M, M_l, M_G, m_l, gaps, t_star);
        }
        }
    } catch (const DegenerateGap&) {
        return std::nullopt;
    }
    return std::nullopt;
}

/// Horizon grid with Monte Carlo regret estimates and theoretical bound values.
struct RegretCurve {
    std::vector<std::uint64_t> grid;
    std::vector<double> regret_mean;
    std::vector<double> regret_se;
    std::vector<double> bound;  ///< NaN where no bound applies
    std::uint64_t replications = 0;
};

/// Least-squares slope of log(regret) against log(n).
inline double decay_exponent(std::span<const std::uint64_t> grid,
                             std::span<const double> regret_mean) {
    if (grid.size() < 3 || grid.size() != regret_mean.size())
        throw ValidationError("decay fit needs at least 3 grid points");
    double sx = 0.0, sy = 0.0;
    const double count = static_cast<double>(grid.size());
    std::vector<double> xs(grid.size()), ys(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(regret_mean[i] > 0.0))
            throw NonPositiveRegret("decay fit needs strictly positive regret values");
        xs[i] = std::log(static_cast<double>(grid[i]));
        ys[i] = std::log(regret_mean[i]);
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / count;
    const double my = sy / count;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

inline double decay_exponent(const RegretCurve& curve) {
    return decay_exponent(curve.grid, curve.regret_mean);
}

/// Estimate the regret curve over a strictly increasing horizon grid.
/// Replication r of grid point h uses stream h * R + r, so output is
/// deterministic in (inputs, base_seed) and independent of thread count.
inline RegretCurve regret_curve(std::span<const ArmModel> arms, const RiskSpec& spec,
                                double delta, std::span<const std::uint64_t> grid,
                                std::uint64_t replications, std::uint64_t base_seed,
                                unsigned threads = 1) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i - 1] < grid[i]))
            throw BadConfig("horizons: grid must be strictly increasing");
    const auto table = oracle_table(arms, spec);
    RegretCurve curve;
    curve.grid.assign(grid.begin(), grid.end());
    curve.replications = replications;
    for (std::size_t h = 0; h < grid.size(); ++h) {
        const auto estimate =
            pseudo_regret(arms, spec, delta, grid[h], replications,
                          replication_seed(base_seed, h * replications), threads);
        curve.regret_mean.push_back(estimate.mean);
        curve.regret_se.push_back(estimate.se);
        const auto bound = theoretical_bound(table, spec, grid[h], arms.size());
        curve.bound.push_back(bound.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    return curve;
}

} // namespace riskbandit
