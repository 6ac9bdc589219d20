#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "riskbandit/empirical_stats.hpp"
#include "riskbandit/errors.hpp"
#include "riskbandit/risk_measures.hpp"
#include "riskbandit/risk_spec.hpp"

namespace riskbandit {

/// State of one RA-LCB run: per-arm observation histories, pull counts and
/// the horizon clock. The index of arm k is
///     B_k = rho_hat_k - eps_rho(n, T_k(n), K, delta),
/// and the policy plays round-robin for the first K pulls, then the argmin
/// index (ties to the lowest arm id). delta is fixed for the whole run.
///
/// A state is owned by a single episode; episodes run in parallel without
/// shared mutable state.
class PolicyState {
public:
    PolicyState(std::size_t num_arms, RiskSpec spec, double delta)
        : spec_(std::move(spec)), num_arms_(num_arms) {
        if (num_arms < 2) throw BadConfig("policy: a bandit needs at least 2 arms");
        if (!(delta > 0.0 && delta < 1.0))
            throw BadConfig("policy: delta must lie in (0, 1)");
        spec_.bounds.delta = delta;
        spec_.validate();
        histories_.resize(num_arms);
        pulls_.assign(num_arms, 0);
        track_exp_sums_ = spec_.kind == RiskKind::Shortfall && spec_.loss &&
                          spec_.loss->kind() == LossKind::ExpMinusOne;
        if (track_exp_sums_) exp_sums_.assign(num_arms, 0.0);
    }

    std::size_t num_arms() const { return num_arms_; }
    std::uint64_t clock() const { return clock_; }
    double delta() const { return spec_.bounds.delta; }
    const RiskSpec& spec() const { return spec_; }
    const SampleBuffer& history(std::size_t arm) const { return histories_.at(arm); }
    std::uint64_t pulls(std::size_t arm) const { return pulls_.at(arm); }

    /// Round-robin over the first K pulls, then the argmin index.
    std::size_t select_arm() const {
        if (clock_ < num_arms_) return static_cast<std::size_t>(clock_);
        std::size_t best = 0;
        double best_index = index(0);
        for (std::size_t k = 1; k < num_arms_; ++k) {
            const double candidate = index(k);
            if (candidate < best_index) {
                best = k;
                best_index = candidate;
            }
        }
        return best;
    }

    /// B_k at the current clock (pre-pull).
    double index(std::size_t arm) const {
        if (pulls_.at(arm) == 0)
            throw NotInitialized("index requested for an arm that was never pulled");
        return risk_estimate(arm) - confidence_radius(spec_, clock_, pulls_[arm], num_arms_);
    }

    /// rho_hat for one arm. Equals empirical_risk(history(arm), spec());
    /// measures with a closed-form estimator are served from running
    /// aggregates accumulated in push order, so the two paths agree exactly.
    double risk_estimate(std::size_t arm) const {
        const SampleBuffer& buf = histories_.at(arm);
        if (buf.empty()) throw EmptyBuffer{};
        switch (spec_.kind) {
        case RiskKind::Mean:
            return sample_mean(buf);
        case RiskKind::CVaR:
            return empirical_cvar(buf, spec_.alpha);
        case RiskKind::MeanDeviation:
            return empirical_md(buf, spec_.gamma, spec_.p);
        case RiskKind::Shortfall:
            if (spec_.loss->kind() == LossKind::Identity) return sample_mean(buf);
            if (track_exp_sums_)
                return std::log(exp_sums_[arm] / static_cast<double>(buf.count()));
            return empirical_shortfall(buf, *spec_.loss);
        }
        return sample_mean(buf);
    }

    /// Record one pull.
    void update(std::size_t arm, double cost) {
        if (arm >= num_arms_) throw BadConfig("policy: arm index out of range");
        if (!(cost >= 0.0 && cost <= spec_.bounds.support_bound))
            throw CostOutOfRange("observed cost falls outside [0, M]");
        histories_[arm].push(cost);
        if (track_exp_sums_) exp_sums_[arm] += std::exp(cost);
        ++pulls_[arm];
        ++clock_;
    }

private:
    RiskSpec spec_;
    std::size_t num_arms_;
    std::vector<SampleBuffer> histories_;
    std::vector<std::uint64_t> pulls_;
    std::vector<double> exp_sums_;
    std::uint64_t clock_ = 0;
    bool track_exp_sums_ = false;
};

} // namespace riskbandit
