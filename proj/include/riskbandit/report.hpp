#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "riskbandit/arm_models.hpp"
#include "riskbandit/config.hpp"
#include "riskbandit/errors.hpp"
#include "riskbandit/regret_lab.hpp"

namespace riskbandit {

/// Locale-independent numeric formatting for CSV output: '.' decimal
/// separator, 12 significant digits, "nan" for missing values.
inline std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file " + path.string());
    return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("failed writing output file " + path.string());
}

} // namespace detail

/// One row per (replication, t); arms are reported 1-based. LF line endings.
inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<EpisodeTrace>& traces) {
    auto out = detail::open_output(path);
    out << "replication,t,arm,cost\n";
    for (std::size_t r = 0; r < traces.size(); ++r)
        for (const auto& step : traces[r].steps)
            out << r << ',' << step.t << ',' << step.arm + 1 << ','
                << format_number(step.cost) << '\n';
    detail::close_output(out, path);
}

/// One row per horizon; decay_exponent_so_far is the log-log slope over the
/// rows seen so far (nan until three are available).
inline void write_curve_csv(const std::filesystem::path& path, const RegretCurve& curve) {
    auto out = detail::open_output(path);
    out << "n,regret_mean,regret_se,bound,decay_exponent_so_far\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        double so_far = std::numeric_limits<double>::quiet_NaN();
        if (i >= 2) {
            try {
                so_far = decay_exponent(
                    std::span(curve.grid.data(), i + 1),
                    std::span(curve.regret_mean.data(), i + 1));
            } catch (const Error&) {
                // leave nan when a prefix mean is nonpositive
            }
        }
        out << curve.grid[i] << ',' << format_number(curve.regret_mean[i]) << ','
            << format_number(curve.regret_se[i]) << ',' << format_number(curve.bound[i])
            << ',' << format_number(so_far) << '\n';
    }
    detail::close_output(out, path);
}

inline const char* family_name(ArmFamily family) {
    switch (family) {
    case ArmFamily::Deterministic: return "deterministic";
    case ArmFamily::Uniform: return "uniform";
    case ArmFamily::ScaledBeta: return "scaled_beta";
    case ArmFamily::ScaledBernoulli: return "scaled_bernoulli";
    }
    return "?";
}

inline std::string risk_name(const RiskSpec& spec) {
    switch (spec.kind) {
    case RiskKind::Mean:
        return "mean";
    case RiskKind::CVaR:
        return "cvar(alpha=" + format_number(spec.alpha) + ")";
    case RiskKind::MeanDeviation:
        return "md(gamma=" + format_number(spec.gamma) + ", p=" + format_number(spec.p) + ")";
    case RiskKind::Shortfall:
        switch (spec.loss->kind()) {
        case LossKind::Identity: return "shortfall(identity)";
        case LossKind::ExpMinusOne: return "shortfall(exp_minus_one)";
        case LossKind::PiecewiseLinear: return "shortfall(piecewise_linear)";
        }
    }
    return "?";
}

/// Per-arm oracle risks, gaps and the derived constants, as `oracle` prints.
inline void print_oracle_report(std::ostream& out, const ExperimentConfig& config,
                                const OracleTable& table) {
    out << "risk: " << risk_name(config.risk)
        << "  M=" << format_number(config.risk.bounds.support_bound)
        << "  delta=" << format_number(config.delta) << "\n";
    for (std::size_t k = 0; k < table.arms.size(); ++k) {
        const auto& c = table.arms[k];
        out << "arm " << k + 1 << " (" << family_name(config.arms[k].family()) << ")"
            << "  rho=" << format_number(c.true_risk) << "  gap=" << format_number(c.gap)
            << "  mean=" << format_number(table.means[k]);
        if (c.density_floor_inv)
            out << "  1/f(q_alpha)=" << format_number(*c.density_floor_inv);
        if (c.shortfall_sensitivity)
            out << "  M_G=" << format_number(*c.shortfall_sensitivity);
        out << "\n";
    }
    out << "optimal arm k* = " << table.optimal_arm + 1 << "\n";
    if (table.m_alpha) out << "m(alpha) = " << format_number(*table.m_alpha) << "\n";
    if (table.shortfall_m_g) out << "M_G = " << format_number(*table.shortfall_m_g) << "\n";
    if (table.loss_constants)
        out << "loss constants on [-M, M]: C_l = "
            << format_number(table.loss_constants->lipschitz)
            << ", m_l = " << format_number(table.loss_constants->derivative_floor)
            << ", M_l = " << format_number(table.loss_constants->magnitude) << "\n";
}

inline void print_curve_summary(std::ostream& out, const RegretCurve& curve) {
    out << "        n   regret_mean     regret_se         bound\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        char line[160];
        std::snprintf(line, sizeof(line), "%9llu  %12.6g  %12.6g  %12.6g\n",
                      static_cast<unsigned long long>(curve.grid[i]), curve.regret_mean[i],
                      curve.regret_se[i], curve.bound[i]);
        out << line;
    }
    if (curve.grid.size() >= 3) {
        try {
            out << "decay exponent: " << format_number(decay_exponent(curve)) << "\n";
        } catch (const Error&) {
            out << "decay exponent: undefined (nonpositive regret mean)\n";
        }
    }
}

} // namespace riskbandit
