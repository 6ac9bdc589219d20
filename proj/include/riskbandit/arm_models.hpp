#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "riskbandit/errors.hpp"
#include "riskbandit/risk_spec.hpp"
#include "riskbandit/rng.hpp"

namespace riskbandit {

struct DeterministicArm {
    double value;
    friend bool operator==(const DeterministicArm&, const DeterministicArm&) = default;
};
struct UniformArm {
    double low, high;
    friend bool operator==(const UniformArm&, const UniformArm&) = default;
};
struct ScaledBetaArm {
    double shape1, shape2, scale;
    friend bool operator==(const ScaledBetaArm&, const ScaledBetaArm&) = default;
};
struct ScaledBernoulliArm {
    double p, scale;
    friend bool operator==(const ScaledBernoulliArm&, const ScaledBernoulliArm&) = default;
};

enum class ArmFamily { Deterministic, Uniform, ScaledBeta, ScaledBernoulli };

namespace detail {
// Oracle tolerances: an order of magnitude tighter than any test tolerance.
inline constexpr double kOracleTol = 1e-10;
inline constexpr double kQuadratureTol = 1e-12;
inline constexpr int kRootIterationCap = 200;

template <class... Fs> struct overloaded : Fs... { using Fs::operator()...; };
template <class... Fs> overloaded(Fs...) -> overloaded<Fs...>;

inline double gauss_kronrod(const auto& f, double lo, double hi) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, lo, hi, 15, kQuadratureTol);
}
} // namespace detail

/// A bounded-support synthetic cost distribution with exact CDF, quantile,
/// sampling, and risk oracles. Immutable once constructed; safe to share
/// across threads.
class ArmModel {
public:
    static ArmModel deterministic(double value,
                                  std::optional<double> support_bound = std::nullopt) {
        const double M = support_bound.value_or(value);
        if (!(value >= 0.0 && value <= M))
            throw ValidationError("arm.value: deterministic value must lie in [0, M]");
        return ArmModel(DeterministicArm{value}, M);
    }

    static ArmModel uniform(double low, double high,
                            std::optional<double> support_bound = std::nullopt) {
        const double M = support_bound.value_or(high);
        if (!(low >= 0.0 && low < high && high <= M))
            throw ValidationError("arm.low/high: uniform support needs 0 <= low < high <= M");
        return ArmModel(UniformArm{low, high}, M);
    }

    static ArmModel scaled_beta(double shape1, double shape2, double scale,
                                std::optional<double> support_bound = std::nullopt) {
        const double M = support_bound.value_or(scale);
        if (!(shape1 > 0.0) || !(shape2 > 0.0))
            throw ValidationError("arm.shape1/shape2: beta shapes must be > 0");
        if (!(scale > 0.0 && scale <= M))
            throw ValidationError("arm.scale: beta scale must lie in (0, M]");
        return ArmModel(ScaledBetaArm{shape1, shape2, scale}, M);
    }

    static ArmModel scaled_bernoulli(double p, double scale,
                                     std::optional<double> support_bound = std::nullopt) {
        const double M = support_bound.value_or(scale);
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("arm.p: bernoulli probability must lie in [0, 1]");
        if (!(scale > 0.0 && scale <= M))
            throw ValidationError("arm.scale: bernoulli scale must lie in (0, M]");
        return ArmModel(ScaledBernoulliArm{p, scale}, M);
    }

    ArmFamily family() const {
        return static_cast<ArmFamily>(family_.index());
    }

    /// Uniform essential bound M: all probability mass lies in [0, M].
    double support_bound() const { return support_bound_; }

    /// True exactly for the families with a continuously differentiable CDF
    /// (Uniform and ScaledBeta); CVaR oracles require this.
    bool continuous_cdf() const {
        return family() == ArmFamily::Uniform || family() == ArmFamily::ScaledBeta;
    }

    double inf_support() const {
        return std::visit(detail::overloaded{
                              [](const DeterministicArm& a) { return a.value; },
                              [](const UniformArm& a) { return a.low; },
                              [](const ScaledBetaArm&) { return 0.0; },
                              [](const ScaledBernoulliArm& a) {
                                  return a.p >= 1.0 ? a.scale : 0.0;
                              },
                          },
                          family_);
    }

    double sup_support() const {
        return std::visit(detail::overloaded{
                              [](const DeterministicArm& a) { return a.value; },
                              [](const UniformArm& a) { return a.high; },
                              [](const ScaledBetaArm& a) { return a.scale; },
                              [](const ScaledBernoulliArm& a) {
                                  return a.p <= 0.0 ? 0.0 : a.scale;
                              },
                          },
                          family_);
    }

    double mean() const {
        return std::visit(detail::overloaded{
                              [](const DeterministicArm& a) { return a.value; },
                              [](const UniformArm& a) { return (a.low + a.high) / 2.0; },
                              [](const ScaledBetaArm& a) {
                                  return a.scale * a.shape1 / (a.shape1 + a.shape2);
                              },
                              [](const ScaledBernoulliArm& a) { return a.p * a.scale; },
                          },
                          family_);
    }

    /// One i.i.d. draw; identical seeds give identical sequences.
    double sample(Xoshiro256PlusPlus& rng) const {
        return std::visit(
            detail::overloaded{
                [](const DeterministicArm& a) { return a.value; },
                [&](const UniformArm& a) {
                    return a.low + (a.high - a.low) * rng.next_double();
                },
                [&](const ScaledBetaArm& a) {
                    // Inverse-CDF sampling keeps draws bit-reproducible.
                    const boost::math::beta_distribution<double> d(a.shape1, a.shape2);
                    return a.scale * boost::math::quantile(d, rng.next_double());
                },
                [&](const ScaledBernoulliArm& a) {
                    return rng.next_double() < a.p ? a.scale : 0.0;
                },
            },
            family_);
    }

    double cdf(double x) const {
        return std::visit(
            detail::overloaded{
                [&](const DeterministicArm& a) { return x >= a.value ? 1.0 : 0.0; },
                [&](const UniformArm& a) {
                    return std::clamp((x - a.low) / (a.high - a.low), 0.0, 1.0);
                },
                [&](const ScaledBetaArm& a) {
                    if (x <= 0.0) return 0.0;
                    if (x >= a.scale) return 1.0;
                    const boost::math::beta_distribution<double> d(a.shape1, a.shape2);
                    return boost::math::cdf(d, x / a.scale);
                },
                [&](const ScaledBernoulliArm& a) {
                    if (x < 0.0) return 0.0;
                    if (x < a.scale) return 1.0 - a.p;
                    return 1.0;
                },
            },
            family_);
    }

    /// Quantile by the inf definition, inf{x : F(x) >= alpha}, clamped to the
    /// support; alpha = 0 returns the infimum of the support.
    double quantile(double alpha) const {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ValidationError("quantile level alpha must lie in [0, 1]");
        if (alpha == 0.0) return inf_support();
        return std::visit(
            detail::overloaded{
                [](const DeterministicArm& a) { return a.value; },
                [&](const UniformArm& a) {
                    return a.low + alpha * (a.high - a.low);
                },
                [&](const ScaledBetaArm& a) {
                    const boost::math::beta_distribution<double> d(a.shape1, a.shape2);
                    return a.scale * boost::math::quantile(d, alpha);
                },
                [&](const ScaledBernoulliArm& a) {
                    return alpha <= 1.0 - a.p ? 0.0 : a.scale;
                },
            },
            family_);
    }

    /// Density of a continuous-CDF arm; AssumptionViolated otherwise.
    double pdf(double x) const {
        return std::visit(
            detail::overloaded{
                [&](const UniformArm& a) {
                    return (x >= a.low && x <= a.high) ? 1.0 / (a.high - a.low) : 0.0;
                },
                [&](const ScaledBetaArm& a) -> double {
                    if (x < 0.0 || x > a.scale) return 0.0;
                    const boost::math::beta_distribution<double> d(a.shape1, a.shape2);
                    return boost::math::pdf(d, x / a.scale) / a.scale;
                },
                [](const auto&) -> double {
                    throw AssumptionViolated("pdf requested on an arm without a density");
                },
            },
            family_);
    }

    /// E g(X) with exact sums for atomic families and adaptive quadrature for
    /// the continuous ones.
    double expect(const auto& g) const {
        return std::visit(
            detail::overloaded{
                [&](const DeterministicArm& a) { return g(a.value); },
                [&](const UniformArm& a) {
                    const double width = a.high - a.low;
                    return detail::gauss_kronrod(g, a.low, a.high) / width;
                },
                [&](const ScaledBetaArm& a) {
                    const boost::math::beta_distribution<double> d(a.shape1, a.shape2);
                    const auto integrand = [&](double x) {
                        return g(x) * boost::math::pdf(d, x / a.scale) / a.scale;
                    };
                    return detail::gauss_kronrod(integrand, 0.0, a.scale);
                },
                [&](const ScaledBernoulliArm& a) {
                    return (1.0 - a.p) * g(0.0) + a.p * g(a.scale);
                },
            },
            family_);
    }

    const std::variant<DeterministicArm, UniformArm, ScaledBetaArm, ScaledBernoulliArm>&
    params() const {
        return family_;
    }

    friend bool operator==(const ArmModel&, const ArmModel&) = default;

private:
    ArmModel(std::variant<DeterministicArm, UniformArm, ScaledBetaArm, ScaledBernoulliArm> f,
             double support_bound)
        : family_(f), support_bound_(support_bound) {}

    std::variant<DeterministicArm, UniformArm, ScaledBetaArm, ScaledBernoulliArm> family_;
    double support_bound_;
};

namespace detail {

/// E g(X) restricted to [lo, hi] for the continuous families (density
/// weighted, unnormalized by the restriction).
inline double partial_expect(const ArmModel& model, const auto& g, double lo, double hi) {
    if (model.family() == ArmFamily::Uniform) {
        const auto& a = std::get<UniformArm>(model.params());
        lo = std::max(lo, a.low);
        hi = std::min(hi, a.high);
        if (!(lo < hi)) return 0.0;
        return gauss_kronrod(g, lo, hi) / (a.high - a.low);
    }
    const auto& a = std::get<ScaledBetaArm>(model.params());
    lo = std::max(lo, 0.0);
    hi = std::min(hi, a.scale);
    if (!(lo < hi)) return 0.0;
    const boost::math::beta_distribution<double> d(a.shape1, a.shape2);
    const auto integrand = [&](double x) {
        return g(x) * boost::math::pdf(d, x / a.scale) / a.scale;
    };
    return gauss_kronrod(integrand, lo, hi);
}

/// G(kappa) = E l(X - kappa); exact for atoms, closed form for the losses
/// that admit one. Piecewise-linear losses on continuous arms integrate
/// segment by segment so no quadrature cell straddles a kink.
inline double expected_loss(const ArmModel& model, const LossFunction& loss, double kappa) {
    if (loss.kind() == LossKind::Identity) return model.mean() - kappa;
    if (loss.kind() == LossKind::ExpMinusOne) {
        if (model.family() == ArmFamily::Uniform) {
            const auto& a = std::get<UniformArm>(model.params());
            const double exp_moment = (std::exp(a.high) - std::exp(a.low)) / (a.high - a.low);
            return std::exp(-kappa) * exp_moment - 1.0;
        }
    }
    if (loss.kind() == LossKind::PiecewiseLinear && model.continuous_cdf()) {
        const auto g = [&](double x) { return loss(x - kappa); };
        double cursor = model.inf_support();
        double acc = 0.0;
        for (double breakpoint : loss.breakpoints()) {
            const double cut = kappa + breakpoint;
            if (cut <= cursor) continue;
            if (cut >= model.sup_support()) break;
            acc += partial_expect(model, g, cursor, cut);
            cursor = cut;
        }
        return acc + partial_expect(model, g, cursor, model.sup_support());
    }
    return model.expect([&](double x) { return loss(x - kappa); });
}

/// Root of the strictly decreasing kappa -> E l(X - kappa) on the support.
inline double shortfall_root(const ArmModel& model, const LossFunction& loss) {
    double lo = model.inf_support();
    double hi = model.sup_support();
    if (!(hi > lo)) return lo;
    for (int iteration = 0; iteration < kRootIterationCap; ++iteration) {
        const double mid = lo + (hi - lo) / 2.0;
        if (mid <= lo || mid >= hi) return mid;
        const double g = expected_loss(model, loss, mid);
        if (g == 0.0) return mid;
        (g > 0.0 ? lo : hi) = mid;
        if (hi - lo <= kOracleTol) return lo + (hi - lo) / 2.0;
    }
    throw NonConvergence("shortfall oracle bisection exceeded its iteration cap");
}

inline double exp_moment(const ArmModel& model) {
    switch (model.family()) {
    case ArmFamily::Deterministic:
        return std::exp(std::get<DeterministicArm>(model.params()).value);
    case ArmFamily::Uniform: {
        const auto& a = std::get<UniformArm>(model.params());
        return (std::exp(a.high) - std::exp(a.low)) / (a.high - a.low);
    }
    case ArmFamily::ScaledBernoulli: {
        const auto& a = std::get<ScaledBernoulliArm>(model.params());
        return 1.0 - a.p + a.p * std::exp(a.scale);
    }
    case ArmFamily::ScaledBeta:
        return model.expect([](double x) { return std::exp(x); });
    }
    return model.expect([](double x) { return std::exp(x); });
}

inline double centered_moment_oracle(const ArmModel& model, double p) {
    const double mu = model.mean();
    switch (model.family()) {
    case ArmFamily::Deterministic:
        return 0.0;
    case ArmFamily::Uniform: {
        const auto& a = std::get<UniformArm>(model.params());
        const double half = (a.high - a.low) / 2.0;
        return std::pow(half, p) / (p + 1.0);
    }
    case ArmFamily::ScaledBernoulli: {
        const auto& a = std::get<ScaledBernoulliArm>(model.params());
        return a.p * std::pow(a.scale - mu, p) + (1.0 - a.p) * std::pow(mu, p);
    }
    case ArmFamily::ScaledBeta: {
        // Split at the mean so the quadrature never crosses the |.| kink.
        const auto& a = std::get<ScaledBetaArm>(model.params());
        const boost::math::beta_distribution<double> d(a.shape1, a.shape2);
        const auto integrand = [&](double x) {
            return std::pow(std::abs(x - mu), p) * boost::math::pdf(d, x / a.scale) / a.scale;
        };
        return gauss_kronrod(integrand, 0.0, mu) + gauss_kronrod(integrand, mu, a.scale);
    }
    }
    return 0.0;
}

} // namespace detail

/// Ground-truth risk of an arm under a spec. CVaR requires a continuous CDF
/// (Assumption on the density at the quantile); discrete arms are accepted by
/// the MD, shortfall and mean oracles.
inline double true_risk(const ArmModel& model, const RiskSpec& spec) {
    switch (spec.kind) {
    case RiskKind::Mean:
        return model.mean();
    case RiskKind::CVaR: {
        if (!model.continuous_cdf())
            throw AssumptionViolated(
                "CVaR oracle requires an arm with a continuously differentiable CDF");
        const double alpha = spec.alpha;
        if (alpha == 0.0) return model.mean();
        if (model.family() == ArmFamily::Uniform) {
            const auto& a = std::get<UniformArm>(model.params());
            return a.low + (a.high - a.low) * (1.0 + alpha) / 2.0;
        }
        // Scaled beta: E[X | X >= q_alpha] from the incomplete-beta identity
        // integral_q^1 t f(t) dt = mu (1 - I_q(shape1 + 1, shape2)).
        const auto& a = std::get<ScaledBetaArm>(model.params());
        const double q = boost::math::quantile(
            boost::math::beta_distribution<double>(a.shape1, a.shape2), alpha);
        const double tail = 1.0 - boost::math::ibeta(a.shape1 + 1.0, a.shape2, q);
        return model.mean() * tail / (1.0 - alpha);
    }
    case RiskKind::MeanDeviation: {
        if (spec.gamma == 0.0) return model.mean();
        const double moment = detail::centered_moment_oracle(model, spec.p);
        const double norm = spec.p == 1.0 ? moment : std::pow(moment, 1.0 / spec.p);
        return model.mean() + spec.gamma * norm;
    }
    case RiskKind::Shortfall: {
        if (!spec.loss) throw MissingConstant("risk.loss: shortfall loss not set");
        switch (spec.loss->kind()) {
        case LossKind::Identity:
            return model.mean();
        case LossKind::ExpMinusOne:
            return std::log(detail::exp_moment(model));
        case LossKind::PiecewiseLinear:
            return detail::shortfall_root(model, *spec.loss);
        }
        return detail::shortfall_root(model, *spec.loss);
    }
    }
    return model.mean();
}

/// Per-arm oracle constants; gaps are filled by oracle_table, which knows the
/// whole arm set.
struct OracleConstants {
    double true_risk = 0.0;
    std::optional<double> density_floor_inv;      ///< 1/f(F^-1(alpha)), CVaR
    std::optional<double> shortfall_sensitivity;  ///< M_G = 1/G'(rho^S)
    double gap = 0.0;                             ///< Delta_k = rho_k - rho_{k*}
};

/// 1/f(F^-1(alpha)) for one arm; AssumptionViolated when the density vanishes
/// (or blows up degenerately) at the quantile.
inline double density_floor_inv(const ArmModel& model, double alpha) {
    if (!model.continuous_cdf())
        throw AssumptionViolated(
            "m(alpha) requires an arm with a continuously differentiable CDF");
    const double density = model.pdf(model.quantile(alpha));
    if (!(density > 0.0) || !std::isfinite(density))
        throw AssumptionViolated("density vanishes at the requested quantile");
    return 1.0 / density;
}

/// M_G for one arm: reciprocal sensitivity 1/G'(rho^S) of the shortfall
/// equation, with G'(kappa) = E l'(X - kappa) evaluated at the true risk.
/// For a piecewise-linear loss the derivative is a step function, so the
/// expectation collapses to an exact CDF sum over the segments.
inline double shortfall_sensitivity(const ArmModel& model, const RiskSpec& spec) {
    if (spec.kind != RiskKind::Shortfall || !spec.loss)
        throw ValidationError("risk.kind: shortfall sensitivity needs a shortfall spec");
    if (spec.loss->kind() == LossKind::Identity) return 1.0;
    const double rho = true_risk(model, spec);
    double slope = 0.0;
    if (spec.loss->kind() == LossKind::PiecewiseLinear && model.continuous_cdf()) {
        const auto& breakpoints = spec.loss->breakpoints();
        const auto& slopes = spec.loss->slopes();
        double mass_below = 0.0;
        for (std::size_t j = 0; j < breakpoints.size(); ++j) {
            const double mass = model.cdf(rho + breakpoints[j]);
            slope += slopes[j] * (mass - mass_below);
            mass_below = mass;
        }
        slope += slopes.back() * (1.0 - mass_below);
    } else {
        slope = model.expect([&](double x) { return spec.loss->derivative(x - rho); });
    }
    if (!(slope > 0.0) || !std::isfinite(slope))
        throw AssumptionViolated("shortfall equation has vanishing sensitivity");
    return 1.0 / slope;
}

inline OracleConstants oracle_constants(const ArmModel& model, const RiskSpec& spec) {
    OracleConstants c;
    c.true_risk = true_risk(model, spec);
    if (spec.kind == RiskKind::CVaR)
        c.density_floor_inv = density_floor_inv(model, spec.alpha);
    if (spec.kind == RiskKind::Shortfall)
        c.shortfall_sensitivity = shortfall_sensitivity(model, spec);
    return c;
}

/// Oracle view of a whole arm set: per-arm constants with gaps against the
/// unique optimal arm, plus the uniform constants the radius formulas need.
struct OracleTable {
    std::vector<OracleConstants> arms;
    std::vector<double> means;
    std::size_t optimal_arm = 0;
    std::optional<double> m_alpha;         ///< sup_k 1/f_k(F_k^-1(alpha))
    std::optional<double> shortfall_m_g;   ///< sup_k M_G
    std::optional<LossFunction::Constants> loss_constants;  ///< C_l, m_l, M_l on [-M, M]
};

inline OracleTable oracle_table(std::span<const ArmModel> arms, const RiskSpec& spec) {
    if (arms.empty()) throw BadConfig("arms: at least one arm required");
    OracleTable table;
    table.arms.reserve(arms.size());
    for (const auto& model : arms) {
        table.arms.push_back(oracle_constants(model, spec));
        table.means.push_back(model.mean());
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < table.arms.size(); ++k)
        if (table.arms[k].true_risk < table.arms[best].true_risk) best = k;
    for (std::size_t k = 0; k < table.arms.size(); ++k) {
        if (k == best) continue;
        if (std::abs(table.arms[k].true_risk - table.arms[best].true_risk) <= 1e-12)
            throw NonUniqueOptimum("two arms tie in oracle risk; the optimal arm must be unique");
    }
    table.optimal_arm = best;
    for (auto& c : table.arms) c.gap = c.true_risk - table.arms[best].true_risk;
    if (spec.kind == RiskKind::CVaR) {
        double sup = 0.0;
        for (const auto& c : table.arms) sup = std::max(sup, *c.density_floor_inv);
        table.m_alpha = sup;
    }
    if (spec.kind == RiskKind::Shortfall) {
        double sup = 0.0;
        for (const auto& c : table.arms) sup = std::max(sup, *c.shortfall_sensitivity);
        table.shortfall_m_g = sup;
        table.loss_constants = spec.loss->constants(spec.bounds.support_bound);
    }
    return table;
}

/// Fill the bound constants a radius formula needs from the arm oracles,
/// keeping any explicitly provided value.
inline RiskSpec resolve_bound_constants(std::span<const ArmModel> arms, RiskSpec spec) {
    if (spec.kind == RiskKind::CVaR && !spec.bounds.quantile_density_bound) {
        double sup = 0.0;
        for (const auto& model : arms)
            sup = std::max(sup, density_floor_inv(model, spec.alpha));
        spec.bounds.quantile_density_bound = sup;
    }
    if (spec.kind == RiskKind::Shortfall) {
        if (!spec.loss) throw MissingConstant("risk.loss: shortfall loss not set");
        if (!spec.bounds.loss_magnitude)
            spec.bounds.loss_magnitude =
                spec.loss->constants(spec.bounds.support_bound).magnitude;
        if (!spec.bounds.shortfall_sensitivity) {
            double sup = 0.0;
            for (const auto& model : arms)
                sup = std::max(sup, shortfall_sensitivity(model, spec));
            spec.bounds.shortfall_sensitivity = sup;
        }
    }
    return spec;
}

} // namespace riskbandit
