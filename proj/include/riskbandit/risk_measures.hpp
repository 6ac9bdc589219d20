#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "riskbandit/empirical_stats.hpp"
#include "riskbandit/errors.hpp"
#include "riskbandit/risk_spec.hpp"

namespace riskbandit {

/// Empirical CVaR at level alpha in [0, 1): plug-in quantile eta plus the
/// scaled mean positive part, eta + (1-alpha)^-1 (1/n) sum (x_t - eta)_+.
/// The Rockafellar-Uryasev objective attains its minimum at the empirical
/// quantile, so no minimization over eta is needed.
inline double empirical_cvar(const SampleBuffer& buf, double alpha) {
    if (buf.empty()) throw EmptyBuffer{};
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw ValidationError("risk.alpha: must lie in [0, 1)");
    const double eta = empirical_quantile(buf, alpha);
    const auto& s = buf.sorted();
    const std::size_t n = s.size();
    const auto above =
        static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), eta) - s.begin());
    const double tail_sum = (buf.prefix_sum(n) - buf.prefix_sum(above)) -
                            eta * static_cast<double>(n - above);
    return eta + tail_sum / ((1.0 - alpha) * static_cast<double>(n));
}

/// Empirical mean-deviation: sample mean plus gamma times the empirical
/// centered L_p norm.
inline double empirical_md(const SampleBuffer& buf, double gamma, double p) {
    if (buf.empty()) throw EmptyBuffer{};
    if (!(gamma >= 0.0)) throw ValidationError("risk.gamma: must be >= 0");
    if (!(p >= 1.0)) throw ValidationError("risk.p: must be >= 1");
    const double mean = sample_mean(buf);
    if (gamma == 0.0) return mean;
    const double moment = centered_p_moment(buf, mean, p);
    const double norm = p == 1.0 ? moment : std::pow(moment, 1.0 / p);
    return mean + gamma * norm;
}

/// Generic root finder for the empirical shortfall equation
/// (1/n) sum l(x_t - kappa) = 0. The objective is continuous and strictly
/// decreasing in kappa, and brackets on [min(buf), max(buf)] since l(0) = 0
/// and l is increasing. Bisection runs until the bracket is narrower than tol
/// or cannot shrink further (tol = 0 exhausts the bracket to one ulp).
inline double empirical_shortfall_bisect(const SampleBuffer& buf, const LossFunction& loss,
                                         double tol = 0.0) {
    if (buf.empty()) throw EmptyBuffer{};
    const double n = static_cast<double>(buf.count());
    const auto objective = [&](double kappa) {
        double acc = 0.0;
        for (double v : buf.values()) acc += loss(v - kappa);
        return acc / n;
    };
    double lo = buf.min_value();
    double hi = buf.max_value();
    if (!(hi - lo > tol)) return lo + (hi - lo) / 2.0;
    for (int iteration = 0; iteration < 200; ++iteration) {
        const double mid = lo + (hi - lo) / 2.0;
        if (mid <= lo || mid >= hi) return mid;  // bracket exhausted
        const double h = objective(mid);
        if (h == 0.0) return mid;
        (h > 0.0 ? lo : hi) = mid;
        if (hi - lo <= tol) return lo + (hi - lo) / 2.0;
    }
    throw NonConvergence("empirical shortfall bisection exceeded 200 iterations");
}

/// Empirical shortfall risk: the unique root of (1/n) sum l(x_t - kappa) = 0.
/// Identity and exponential losses admit closed-form roots (the sample mean
/// and log of the empirical exp-moment); other losses go through bisection.
inline double empirical_shortfall(const SampleBuffer& buf, const LossFunction& loss,
                                  double tol = 0.0) {
    if (buf.empty()) throw EmptyBuffer{};
    switch (loss.kind()) {
    case LossKind::Identity:
        return sample_mean(buf);
    case LossKind::ExpMinusOne: {
        double acc = 0.0;
        for (double v : buf.values()) acc += std::exp(v);
        return std::log(acc / static_cast<double>(buf.count()));
    }
    case LossKind::PiecewiseLinear:
        return empirical_shortfall_bisect(buf, loss, tol);
    }
    return empirical_shortfall_bisect(buf, loss, tol);
}

/// Dispatch to the estimator matching the spec. Also serves the pooled policy
/// sequence when buf holds all n observed costs.
inline double empirical_risk(const SampleBuffer& buf, const RiskSpec& spec) {
    switch (spec.kind) {
    case RiskKind::Mean:
        return sample_mean(buf);
    case RiskKind::CVaR:
        return empirical_cvar(buf, spec.alpha);
    case RiskKind::MeanDeviation:
        return empirical_md(buf, spec.gamma, spec.p);
    case RiskKind::Shortfall:
        if (!spec.loss) throw MissingConstant("risk.loss: shortfall loss not set");
        return empirical_shortfall(buf, *spec.loss);
    }
    return sample_mean(buf);
}

/// Measure-specific confidence radius eps_rho(n, T_k(n), K, delta) used by the
/// index policy. Strictly decreasing in t_k for the default variants.
inline double confidence_radius(const RiskSpec& spec, std::uint64_t n, std::uint64_t t_k,
                                std::size_t num_arms) {
    if (n < 1) throw ValidationError("radius: n must be >= 1");
    if (t_k < 1 || t_k > n) throw ValidationError("radius: t_k must lie in [1, n]");
    if (num_arms < 1) throw ValidationError("radius: K must be >= 1");
    const double delta = spec.bounds.delta;
    const double M = spec.bounds.support_bound;
    const double nd = static_cast<double>(n);
    const double Kd = static_cast<double>(num_arms);
    const double td = static_cast<double>(t_k);

    switch (spec.kind) {
    case RiskKind::Mean:
        return M * std::sqrt(std::log(4.0 * nd * nd * Kd / delta) / (2.0 * td));
    case RiskKind::CVaR: {
        if (!spec.bounds.quantile_density_bound)
            throw MissingConstant("risk.constants.m_alpha: required for the CVaR radius");
        const double m_alpha = *spec.bounds.quantile_density_bound;
        const double inv = 1.0 / (1.0 - spec.alpha);
        const double coefficient =
            inv * (1.0 - 3.0 * delta / nd) * M + 2.0 * (1.0 + inv) * m_alpha;
        return coefficient * std::sqrt(std::log(2.0 * nd * nd * Kd / delta) / (2.0 * td));
    }
    case RiskKind::MeanDeviation: {
        const double log_term = std::log(4.0 * nd * nd * Kd / delta);
        const double mean_part = M * std::sqrt(log_term / td);
        const double deviation_part =
            M * std::pow((spec.p + 1.0) * std::sqrt(log_term / (2.0 * td)), 1.0 / spec.p);
        return spec.md_variant == MdRadiusVariant::Sum ? mean_part + deviation_part
                                                       : mean_part - deviation_part;
    }
    case RiskKind::Shortfall: {
        if (!spec.bounds.loss_magnitude)
            throw MissingConstant("risk.constants.M_l: required for the shortfall radius");
        if (!spec.bounds.shortfall_sensitivity)
            throw MissingConstant("risk.constants.M_G: required for the shortfall radius");
        return 2.0 * *spec.bounds.loss_magnitude * *spec.bounds.shortfall_sensitivity *
               std::sqrt(std::log(4.0 * nd * nd * Kd / delta) / (2.0 * td));
    }
    }
    throw ValidationError("risk.kind: unknown risk kind");
}

} // namespace riskbandit
