#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskbandit/arm_models.hpp"
#include "riskbandit/errors.hpp"
#include "riskbandit/risk_spec.hpp"

namespace riskbandit {

/// One experiment: arm set, risk spec with resolved bound constants, horizon
/// grid and replication budget. Parsed from a strict JSON document (unknown
/// keys are errors, so typos in constant names cannot pass silently).
struct ExperimentConfig {
    std::vector<ArmModel> arms;
    RiskSpec risk;
    double delta = 0.1;
    std::vector<std::uint64_t> horizons;
    std::uint64_t replications = 100;
    std::uint64_t seed = 1;
    std::string out_dir;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

using json = nlohmann::json;

inline void expect_keys(const json& object, std::initializer_list<const char*> allowed,
                        const std::string& context) {
    for (const auto& item : object.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* key) {
                return item.key() == key;
            }) == allowed.end())
            throw ValidationError(context + "." + item.key() + ": unknown key");
    }
}

inline double require_number(const json& object, const char* key, const std::string& context) {
    if (!object.contains(key))
        throw ValidationError(context + "." + key + ": missing required field");
    if (!object[key].is_number())
        throw ValidationError(context + "." + key + ": expected a number");
    return object[key].get<double>();
}

inline ArmModel parse_arm(const json& node, const std::string& context, double support_bound) {
    if (!node.is_object()) throw ValidationError(context + ": expected an object");
    if (!node.contains("family"))
        throw ValidationError(context + ".family: missing required field");
    const std::string family = node["family"].get<std::string>();
    if (family == "deterministic") {
        expect_keys(node, {"family", "value"}, context);
        return ArmModel::deterministic(require_number(node, "value", context), support_bound);
    }
    if (family == "uniform") {
        expect_keys(node, {"family", "low", "high"}, context);
        return ArmModel::uniform(require_number(node, "low", context),
                                 require_number(node, "high", context), support_bound);
    }
    if (family == "scaled_beta") {
        expect_keys(node, {"family", "shape1", "shape2", "scale"}, context);
        return ArmModel::scaled_beta(require_number(node, "shape1", context),
                                     require_number(node, "shape2", context),
                                     require_number(node, "scale", context), support_bound);
    }
    if (family == "scaled_bernoulli") {
        expect_keys(node, {"family", "p", "scale"}, context);
        return ArmModel::scaled_bernoulli(require_number(node, "p", context),
                                          require_number(node, "scale", context),
                                          support_bound);
    }
    throw ValidationError(context + ".family: unknown family '" + family + "'");
}

inline LossFunction parse_loss(const json& node, const std::string& context) {
    if (!node.is_object()) throw ValidationError(context + ": expected an object");
    if (!node.contains("kind"))
        throw ValidationError(context + ".kind: missing required field");
    const std::string kind = node["kind"].get<std::string>();
    if (kind == "identity") {
        expect_keys(node, {"kind"}, context);
        return LossFunction::identity();
    }
    if (kind == "exp_minus_one") {
        expect_keys(node, {"kind"}, context);
        return LossFunction::exp_minus_one();
    }
    if (kind == "piecewise_linear") {
        expect_keys(node, {"kind", "breakpoints", "slopes"}, context);
        if (!node.contains("breakpoints") || !node.contains("slopes"))
            throw ValidationError(context + ": piecewise_linear needs breakpoints and slopes");
        return LossFunction::piecewise_linear(node["breakpoints"].get<std::vector<double>>(),
                                              node["slopes"].get<std::vector<double>>());
    }
    throw ValidationError(context + ".kind: unknown loss kind '" + kind + "'");
}

inline json loss_to_json(const LossFunction& loss) {
    switch (loss.kind()) {
    case LossKind::Identity:
        return {{"kind", "identity"}};
    case LossKind::ExpMinusOne:
        return {{"kind", "exp_minus_one"}};
    case LossKind::PiecewiseLinear:
        return {{"kind", "piecewise_linear"},
                {"breakpoints", loss.breakpoints()},
                {"slopes", loss.slopes()}};
    }
    return {{"kind", "identity"}};
}

inline json arm_to_json(const ArmModel& arm) {
    return std::visit(
        overloaded{
            [](const DeterministicArm& a) {
                return json{{"family", "deterministic"}, {"value", a.value}};
            },
            [](const UniformArm& a) {
                return json{{"family", "uniform"}, {"low", a.low}, {"high", a.high}};
            },
            [](const ScaledBetaArm& a) {
                return json{{"family", "scaled_beta"},
                            {"shape1", a.shape1},
                            {"shape2", a.shape2},
                            {"scale", a.scale}};
            },
            [](const ScaledBernoulliArm& a) {
                return json{{"family", "scaled_bernoulli"}, {"p", a.p}, {"scale", a.scale}};
            },
        },
        arm.params());
}

} // namespace detail

/// Parse and validate an experiment document. Defaults: delta 0.1,
/// replications 100, seed 1, md_radius_variant "sum", support_bound the
/// largest natural arm bound. Bound constants the chosen risk kind needs are
/// oracle-filled unless given explicitly under risk.constants.
inline ExperimentConfig parse_config(const std::string& text) {
    detail::json document;
    try {
        document = detail::json::parse(text);
    } catch (const detail::json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!document.is_object()) throw ParseError("config: expected a JSON object");
    detail::expect_keys(document,
                        {"arms", "risk", "support_bound", "delta", "horizons", "replications",
                         "seed", "md_radius_variant", "out_dir"},
                        "config");

    ExperimentConfig config;
    if (document.contains("delta")) {
        config.delta = detail::require_number(document, "delta", "config");
        if (!(config.delta > 0.0 && config.delta < 1.0))
            throw ValidationError("config.delta: must lie in (0, 1)");
    }

    if (!document.contains("arms") || !document["arms"].is_array() ||
        document["arms"].size() < 2)
        throw ValidationError("config.arms: at least 2 arms required");

    // The global essential bound defaults to the widest natural arm support;
    // validating the arms against it happens inside the factories.
    std::optional<double> bound;
    if (document.contains("support_bound")) {
        bound = detail::require_number(document, "support_bound", "config");
        if (!(*bound > 0.0))
            throw ValidationError("config.support_bound: must be > 0");
    }
    double natural = 0.0;
    for (std::size_t k = 0; k < document["arms"].size(); ++k) {
        const auto probe = detail::parse_arm(document["arms"][k],
                                             "config.arms[" + std::to_string(k) + "]",
                                             std::numeric_limits<double>::infinity());
        natural = std::max(natural, probe.sup_support());
    }
    const double M = bound.value_or(natural);
    for (std::size_t k = 0; k < document["arms"].size(); ++k)
        config.arms.push_back(detail::parse_arm(
            document["arms"][k], "config.arms[" + std::to_string(k) + "]", M));

    if (!document.contains("risk") || !document["risk"].is_object())
        throw ValidationError("config.risk: missing required object");
    const auto& risk = document["risk"];
    detail::expect_keys(risk, {"kind", "alpha", "gamma", "p", "loss", "constants"},
                        "config.risk");
    if (!risk.contains("kind"))
        throw ValidationError("config.risk.kind: missing required field");
    const std::string kind = risk["kind"].get<std::string>();
    RiskSpec spec;
    if (kind == "mean") {
        detail::expect_keys(risk, {"kind", "constants"}, "config.risk");
        spec = RiskSpec::mean();
    } else if (kind == "cvar") {
        detail::expect_keys(risk, {"kind", "alpha", "constants"}, "config.risk");
        const double alpha = detail::require_number(risk, "alpha", "config.risk");
        if (!(alpha >= 0.0 && alpha < 1.0))
            throw ValidationError("config.risk.alpha: must lie in [0, 1)");
        spec = RiskSpec::cvar(alpha);
    } else if (kind == "md") {
        detail::expect_keys(risk, {"kind", "gamma", "p", "constants"}, "config.risk");
        const double gamma = detail::require_number(risk, "gamma", "config.risk");
        const double p = detail::require_number(risk, "p", "config.risk");
        if (!(gamma >= 0.0)) throw ValidationError("config.risk.gamma: must be >= 0");
        if (!(p >= 1.0)) throw ValidationError("config.risk.p: must be >= 1");
        spec = RiskSpec::mean_deviation(gamma, p);
    } else if (kind == "shortfall") {
        detail::expect_keys(risk, {"kind", "loss", "constants"}, "config.risk");
        if (!risk.contains("loss"))
            throw ValidationError("config.risk.loss: missing required field");
        spec = RiskSpec::shortfall(detail::parse_loss(risk["loss"], "config.risk.loss"));
    } else {
        throw ValidationError("config.risk.kind: unknown kind '" + kind + "'");
    }
    spec.bounds.support_bound = M;
    spec.bounds.delta = config.delta;
    if (risk.contains("constants")) {
        const auto& constants = risk["constants"];
        detail::expect_keys(constants, {"m_alpha", "M_l", "M_G"}, "config.risk.constants");
        if (constants.contains("m_alpha"))
            spec.bounds.quantile_density_bound =
                detail::require_number(constants, "m_alpha", "config.risk.constants");
        if (constants.contains("M_l"))
            spec.bounds.loss_magnitude =
                detail::require_number(constants, "M_l", "config.risk.constants");
        if (constants.contains("M_G"))
            spec.bounds.shortfall_sensitivity =
                detail::require_number(constants, "M_G", "config.risk.constants");
        for (const auto& value :
             {spec.bounds.quantile_density_bound, spec.bounds.loss_magnitude,
              spec.bounds.shortfall_sensitivity})
            if (value && !(*value > 0.0))
                throw ValidationError("config.risk.constants: bound constants must be > 0");
    }

    if (document.contains("md_radius_variant")) {
        const std::string variant = document["md_radius_variant"].get<std::string>();
        if (variant == "sum")
            spec.md_variant = MdRadiusVariant::Sum;
        else if (variant == "as_written")
            spec.md_variant = MdRadiusVariant::AsWritten;
        else
            throw ValidationError("config.md_radius_variant: expected \"sum\" or \"as_written\"");
    }
    config.risk = resolve_bound_constants(config.arms, spec);

    if (!document.contains("horizons") || !document["horizons"].is_array() ||
        document["horizons"].empty())
        throw ValidationError("config.horizons: nonempty array required");
    for (const auto& h : document["horizons"]) {
        if (!h.is_number_unsigned() || h.get<std::uint64_t>() < 1)
            throw ValidationError("config.horizons: entries must be positive integers");
        config.horizons.push_back(h.get<std::uint64_t>());
    }
    for (std::size_t i = 1; i < config.horizons.size(); ++i)
        if (!(config.horizons[i - 1] < config.horizons[i]))
            throw ValidationError("config.horizons: must be strictly increasing");

    if (document.contains("replications")) {
        if (!document["replications"].is_number_unsigned())
            throw ValidationError("config.replications: expected a positive integer");
        config.replications = document["replications"].get<std::uint64_t>();
        if (config.replications < 1)
            throw ValidationError("config.replications: must be >= 1");
    }
    if (document.contains("seed")) {
        if (!document["seed"].is_number_unsigned())
            throw ValidationError("config.seed: expected an unsigned integer");
        config.seed = document["seed"].get<std::uint64_t>();
    }
    if (document.contains("out_dir")) {
        if (!document["out_dir"].is_string())
            throw ValidationError("config.out_dir: expected a string");
        config.out_dir = document["out_dir"].get<std::string>();
    }
    return config;
}

/// Canonical JSON form of a config; parse(serialize(parse(text))) compares
/// equal to parse(text) because resolved constants are materialized.
inline std::string serialize_config(const ExperimentConfig& config) {
    detail::json document;
    document["arms"] = detail::json::array();
    for (const auto& arm : config.arms) document["arms"].push_back(detail::arm_to_json(arm));
    detail::json risk;
    switch (config.risk.kind) {
    case RiskKind::Mean:
        risk["kind"] = "mean";
        break;
    case RiskKind::CVaR:
        risk["kind"] = "cvar";
        risk["alpha"] = config.risk.alpha;
        break;
    case RiskKind::MeanDeviation:
        risk["kind"] = "md";
        risk["gamma"] = config.risk.gamma;
        risk["p"] = config.risk.p;
        break;
    case RiskKind::Shortfall:
        risk["kind"] = "shortfall";
        risk["loss"] = detail::loss_to_json(*config.risk.loss);
        break;
    }
    detail::json constants = detail::json::object();
    if (config.risk.bounds.quantile_density_bound)
        constants["m_alpha"] = *config.risk.bounds.quantile_density_bound;
    if (config.risk.bounds.loss_magnitude)
        constants["M_l"] = *config.risk.bounds.loss_magnitude;
    if (config.risk.bounds.shortfall_sensitivity)
        constants["M_G"] = *config.risk.bounds.shortfall_sensitivity;
    if (!constants.empty()) risk["constants"] = constants;
    document["risk"] = risk;
    document["support_bound"] = config.risk.bounds.support_bound;
    document["delta"] = config.delta;
    document["horizons"] = config.horizons;
    document["replications"] = config.replications;
    document["seed"] = config.seed;
    document["md_radius_variant"] =
        config.risk.md_variant == MdRadiusVariant::Sum ? "sum" : "as_written";
    if (!config.out_dir.empty()) document["out_dir"] = config.out_dir;
    return document.dump(2) + "\n";
}

} // namespace riskbandit
