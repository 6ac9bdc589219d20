#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "riskbandit/errors.hpp"

namespace riskbandit {

enum class LossKind { Identity, ExpMinusOne, PiecewiseLinear };

/// Strictly increasing loss with l(0) = 0, the acceptability criterion behind
/// the shortfall risk measure. Piecewise-linear losses are anchored at the
/// origin: slopes[i] applies between breakpoints[i-1] and breakpoints[i],
/// with the first/last slope extending to -inf/+inf.
class LossFunction {
public:
    static LossFunction identity() { return LossFunction(LossKind::Identity); }

    static LossFunction exp_minus_one() { return LossFunction(LossKind::ExpMinusOne); }

    static LossFunction piecewise_linear(std::vector<double> breakpoints,
                                         std::vector<double> slopes) {
        if (slopes.size() != breakpoints.size() + 1)
            throw ValidationError("loss.slopes: expected one more slope than breakpoints");
        for (double s : slopes)
            if (!(s > 0.0))
                throw ValidationError("loss.slopes: every slope must be > 0");
        for (std::size_t i = 1; i < breakpoints.size(); ++i)
            if (!(breakpoints[i - 1] < breakpoints[i]))
                throw ValidationError("loss.breakpoints: must be strictly increasing");
        LossFunction l(LossKind::PiecewiseLinear);
        l.breakpoints_ = std::move(breakpoints);
        l.slopes_ = std::move(slopes);
        return l;
    }

    LossKind kind() const { return kind_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& slopes() const { return slopes_; }

    double operator()(double t) const {
        switch (kind_) {
        case LossKind::Identity:
            return t;
        case LossKind::ExpMinusOne:
            return std::expm1(t);
        case LossKind::PiecewiseLinear:
            return piecewise_value(t);
        }
        return t;
    }

    /// Right derivative of the loss at t.
    double derivative(double t) const {
        switch (kind_) {
        case LossKind::Identity:
            return 1.0;
        case LossKind::ExpMinusOne:
            return std::exp(t);
        case LossKind::PiecewiseLinear:
            return slopes_[segment_index(t)];
        }
        return 1.0;
    }

    /// Lipschitz ceiling C_l, derivative floor m_l and magnitude bound M_l of
    /// the loss over [-bound, bound].
    struct Constants {
        double lipschitz;         // C_l = sup l'
        double derivative_floor;  // m_l = inf l' > 0
        double magnitude;         // M_l = max(|l(-bound)|, l(bound))
    };

    Constants constants(double bound) const {
        switch (kind_) {
        case LossKind::Identity:
            return {1.0, 1.0, bound};
        case LossKind::ExpMinusOne:
            return {std::exp(bound), std::exp(-bound),
                    std::max(std::abs(std::expm1(-bound)), std::expm1(bound))};
        case LossKind::PiecewiseLinear: {
            const std::size_t lo = segment_index(-bound);
            const std::size_t hi = segment_index(bound);
            double cmax = slopes_[lo];
            double cmin = slopes_[lo];
            for (std::size_t i = lo; i <= hi; ++i) {
                cmax = std::max(cmax, slopes_[i]);
                cmin = std::min(cmin, slopes_[i]);
            }
            return {cmax, cmin,
                    std::max(std::abs(piecewise_value(-bound)), piecewise_value(bound))};
        }
        }
        return {1.0, 1.0, bound};
    }

    friend bool operator==(const LossFunction& a, const LossFunction& b) {
        return a.kind_ == b.kind_ && a.breakpoints_ == b.breakpoints_ &&
               a.slopes_ == b.slopes_;
    }

private:
    explicit LossFunction(LossKind kind) : kind_(kind) {}

    std::size_t segment_index(double t) const {
        return static_cast<std::size_t>(
            std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t) -
            breakpoints_.begin());
    }

    // Integral of the slope step function from 0 to t; keeps l(0) = 0 exact.
    double piecewise_value(double t) const {
        double value = 0.0;
        if (t >= 0.0) {
            double pos = 0.0;
            std::size_t seg = segment_index(0.0);
            while (pos < t) {
                const double seg_end =
                    seg < breakpoints_.size() ? std::min(breakpoints_[seg], t) : t;
                value += slopes_[seg] * (seg_end - pos);
                pos = seg_end;
                ++seg;
            }
        } else {
            double pos = 0.0;
            std::size_t seg = segment_index(0.0);
            while (pos > t) {
                const double seg_start =
                    seg > 0 ? std::max(breakpoints_[seg - 1], t) : t;
                value -= slopes_[seg] * (pos - seg_start);
                pos = seg_start;
                if (seg == 0) break;
                --seg;
            }
        }
        return value;
    }

    LossKind kind_;
    std::vector<double> breakpoints_;
    std::vector<double> slopes_;
};

} // namespace riskbandit
