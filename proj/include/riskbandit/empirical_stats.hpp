#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "riskbandit/errors.hpp"

namespace riskbandit {

/// Append-only observation buffer. Order statistics are served from a sorted
/// view that is synced lazily on first use after an append (the usual case is
/// a single pending value, which is rotated into place); a prefix-sum table
/// over the sorted view makes quantile-tail sums O(log n) per query.
///
/// Single-writer: reads concurrent with writes are not allowed, but a synced
/// buffer may be read from many threads and buffers can be moved freely.
class SampleBuffer {
public:
    SampleBuffer() = default;

    explicit SampleBuffer(std::vector<double> values) {
        for (double v : values) push(v);
    }

    void push(double value) {
        values_.push_back(value);
        total_ += value;
        min_ = std::min(min_, value);
        max_ = std::max(max_, value);
    }

    std::size_t count() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    /// Observations in append order.
    const std::vector<double>& values() const { return values_; }

    /// Observations in nondecreasing order.
    const std::vector<double>& sorted() const {
        sync();
        return sorted_;
    }

    /// Sum of the i smallest observations.
    double prefix_sum(std::size_t i) const {
        sync();
        return prefix_[i];
    }

    /// Running sum in append order (use for the sample mean).
    double total() const { return total_; }

    double min_value() const {
        if (empty()) throw EmptyBuffer{};
        return min_;
    }

    double max_value() const {
        if (empty()) throw EmptyBuffer{};
        return max_;
    }

private:
    void sync() const {
        const std::size_t n = values_.size();
        if (synced_ == n) return;
        std::size_t first_changed = 0;
        if (synced_ == 0) {
            sorted_ = values_;
            std::sort(sorted_.begin(), sorted_.end());
        } else if (n - synced_ == 1) {
            const double v = values_.back();
            auto pos = std::upper_bound(sorted_.begin(), sorted_.end(), v);
            first_changed = static_cast<std::size_t>(pos - sorted_.begin());
            sorted_.insert(pos, v);
        } else {
            sorted_.insert(sorted_.end(), values_.begin() + synced_, values_.end());
            std::sort(sorted_.begin() + synced_, sorted_.end());
            const double smallest_pending = sorted_[synced_];
            std::inplace_merge(sorted_.begin(), sorted_.begin() + synced_, sorted_.end());
            first_changed = static_cast<std::size_t>(
                std::lower_bound(sorted_.begin(), sorted_.end(), smallest_pending) -
                sorted_.begin());
        }
        prefix_.resize(n + 1);
        prefix_[0] = 0.0;
        for (std::size_t i = first_changed; i < n; ++i)
            prefix_[i + 1] = prefix_[i] + sorted_[i];
        synced_ = n;
    }

    std::vector<double> values_;
    double total_ = 0.0;
    double min_ = std::numeric_limits<double>::infinity();
    double max_ = -std::numeric_limits<double>::infinity();
    mutable std::vector<double> sorted_;
    mutable std::vector<double> prefix_;
    mutable std::size_t synced_ = 0;
};

/// Empirical CDF: fraction of observations <= x.
inline double empirical_cdf(const SampleBuffer& buf, double x) {
    if (buf.empty()) throw EmptyBuffer{};
    const auto& s = buf.sorted();
    const auto at_most = std::upper_bound(s.begin(), s.end(), x) - s.begin();
    return static_cast<double>(at_most) / static_cast<double>(s.size());
}

/// Empirical quantile by the inf definition: the smallest order statistic
/// x_(i) with i/n >= alpha. At alpha = 0 this returns the sample minimum,
/// mirroring the support-infimum convention of the distribution oracles.
inline double empirical_quantile(const SampleBuffer& buf, double alpha) {
    if (buf.empty()) throw EmptyBuffer{};
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ValidationError("quantile level alpha must lie in [0, 1]");
    const auto& s = buf.sorted();
    if (alpha == 0.0) return s.front();
    const double n = static_cast<double>(s.size());
    auto rank = static_cast<std::size_t>(std::ceil(alpha * n));
    rank = std::clamp<std::size_t>(rank, 1, s.size());
    return s[rank - 1];
}

inline double sample_mean(const SampleBuffer& buf) {
    if (buf.empty()) throw EmptyBuffer{};
    return buf.total() / static_cast<double>(buf.count());
}

/// Pre-root centered absolute moment (1/n) sum |x_t - center|^p, p >= 1.
inline double centered_p_moment(const SampleBuffer& buf, double center, double p) {
    if (buf.empty()) throw EmptyBuffer{};
    if (!(p >= 1.0)) throw ValidationError("moment order p must be >= 1");
    double acc = 0.0;
    if (p == 1.0) {
        for (double v : buf.values()) acc += std::abs(v - center);
    } else if (p == 2.0) {
        for (double v : buf.values()) acc += (v - center) * (v - center);
    } else {
        for (double v : buf.values()) acc += std::pow(std::abs(v - center), p);
    }
    return acc / static_cast<double>(buf.count());
}

} // namespace riskbandit
