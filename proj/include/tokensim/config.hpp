#pragma once

// Scenario configuration documents: JSON with two sections, `scenario` and
// `economy`. Unknown keys are rejected so typos cannot silently fall back to
// defaults, and every error names the offending key path.

#include "tokensim/montecarlo.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace tokensim {

class ConfigError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline double require_number(const nlohmann::json& value, const std::string& path) {
    if (!value.is_number()) throw ConfigError(path + ": expected a number");
    return value.get<double>();
}

inline std::int64_t require_integer(const nlohmann::json& value, const std::string& path) {
    if (!value.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return value.get<std::int64_t>();
}

inline std::uint64_t require_seed(const nlohmann::json& value, const std::string& path) {
    if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
        throw ConfigError(path + ": expected a non-negative integer");
    }
    return value.get<std::uint64_t>();
}

inline bool require_bool(const nlohmann::json& value, const std::string& path) {
    if (!value.is_boolean()) throw ConfigError(path + ": expected true or false");
    return value.get<bool>();
}

inline std::string require_string(const nlohmann::json& value, const std::string& path) {
    if (!value.is_string()) throw ConfigError(path + ": expected a string");
    return value.get<std::string>();
}

}  // namespace detail

/// Parses a configuration document. All keys are optional except
/// scenario.initial_pool_xns and scenario.decay_rate_per_day; absent keys
/// keep the documented defaults (3652 timesteps, 100 runs, all toggles on).
inline ScenarioConfig parse_scenario_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");

    ScenarioConfig config;
    bool have_pool = false;
    bool have_decay = false;

    for (const auto& [section, body] : doc.items()) {
        if (section == "scenario") {
            if (!body.is_object()) throw ConfigError("scenario: expected an object");
            for (const auto& [key, value] : body.items()) {
                const std::string path = "scenario." + key;
                if (key == "initial_pool_xns") {
                    config.initial_pool_xns = detail::require_number(value, path);
                    have_pool = true;
                } else if (key == "decay_rate_per_day") {
                    config.decay_rate_per_day = detail::require_number(value, path);
                    have_decay = true;
                } else if (key == "timesteps") {
                    config.timesteps = detail::require_integer(value, path);
                } else if (key == "runs") {
                    config.runs = detail::require_integer(value, path);
                } else if (key == "master_seed") {
                    config.master_seed = detail::require_seed(value, path);
                } else if (key == "replenish") {
                    config.toggles.replenish = detail::require_bool(value, path);
                } else if (key == "noise") {
                    config.toggles.noise = detail::require_bool(value, path);
                } else if (key == "behavior") {
                    config.toggles.behavior = detail::require_bool(value, path);
                } else if (key == "label") {
                    config.label = detail::require_string(value, path);
                } else {
                    throw ConfigError("unknown key: " + path);
                }
            }
        } else if (section == "economy") {
            if (!body.is_object()) throw ConfigError("economy: expected an object");
            EconomyParams& e = config.economy;
            for (const auto& [key, value] : body.items()) {
                const std::string path = "economy." + key;
                if (key == "total_supply") {
                    e.total_supply = detail::require_number(value, path);
                } else if (key == "velocity") {
                    e.velocity = detail::require_number(value, path);
                } else if (key == "platform_fee_rate") {
                    e.platform_fee_rate = detail::require_number(value, path);
                } else if (key == "fee_per_user_usd_day") {
                    e.fee_per_user_usd_day = detail::require_number(value, path);
                } else if (key == "dev_arrival_base_rate") {
                    e.dev_arrival_base_rate = detail::require_number(value, path);
                } else if (key == "dev_attractiveness_coeff") {
                    e.dev_attractiveness_coeff = detail::require_number(value, path);
                } else if (key == "dev_usd_scale") {
                    e.dev_usd_scale = detail::require_number(value, path);
                } else if (key == "user_growth_rate") {
                    e.user_growth_rate = detail::require_number(value, path);
                } else if (key == "user_carrying_capacity") {
                    e.user_carrying_capacity = detail::require_number(value, path);
                } else if (key == "demand_sigma") {
                    e.demand_sigma = detail::require_number(value, path);
                } else if (key == "price_floor") {
                    e.price_floor = detail::require_number(value, path);
                } else if (key == "demand_ema_alpha") {
                    e.demand_ema_alpha = detail::require_number(value, path);
                } else {
                    throw ConfigError("unknown key: " + path);
                }
            }
        } else {
            throw ConfigError("unknown key: " + section);
        }
    }

    if (!have_pool) throw ConfigError("missing required key: scenario.initial_pool_xns");
    if (!have_decay) throw ConfigError("missing required key: scenario.decay_rate_per_day");

    // Re-shape domain validation failures as config errors with key paths.
    if (!(config.initial_pool_xns >= 0.0)) {
        throw ConfigError("scenario.initial_pool_xns: must be >= 0");
    }
    if (config.initial_pool_xns > config.economy.total_supply) {
        throw ConfigError("scenario.initial_pool_xns: exceeds economy.total_supply");
    }
    if (!(config.decay_rate_per_day > 0.0)) {
        throw ConfigError("scenario.decay_rate_per_day: must be > 0");
    }
    if (config.timesteps < 1) throw ConfigError("scenario.timesteps: must be >= 1");
    if (config.runs < 1) throw ConfigError("scenario.runs: must be >= 1");
    try {
        config.economy.validate();
    } catch (const EconomyError& ex) {
        throw ConfigError(ex.what());
    }
    return config;
}

inline ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    ScenarioConfig config = parse_scenario_config(buffer.str());
    if (config.label == "custom") {
        config.label = path.stem().string();  // default the label to the file stem
    }
    return config;
}

/// Serializes the resolved configuration (defaults applied) back to JSON.
inline std::string dump_scenario_config(const ScenarioConfig& config) {
    nlohmann::json doc;
    doc["scenario"] = {
        {"label", config.label},
        {"initial_pool_xns", config.initial_pool_xns},
        {"decay_rate_per_day", config.decay_rate_per_day},
        {"timesteps", config.timesteps},
        {"runs", config.runs},
        {"master_seed", config.master_seed},
        {"replenish", config.toggles.replenish},
        {"noise", config.toggles.noise},
        {"behavior", config.toggles.behavior},
    };
    const EconomyParams& e = config.economy;
    doc["economy"] = {
        {"total_supply", e.total_supply},
        {"velocity", e.velocity},
        {"platform_fee_rate", e.platform_fee_rate},
        {"fee_per_user_usd_day", e.fee_per_user_usd_day},
        {"dev_arrival_base_rate", e.dev_arrival_base_rate},
        {"dev_attractiveness_coeff", e.dev_attractiveness_coeff},
        {"dev_usd_scale", e.dev_usd_scale},
        {"user_growth_rate", e.user_growth_rate},
        {"user_carrying_capacity", e.user_carrying_capacity},
        {"demand_sigma", e.demand_sigma},
        {"price_floor", e.price_floor},
        {"demand_ema_alpha", e.demand_ema_alpha},
    };
    return doc.dump(2) + "\n";
}

}  // namespace tokensim
