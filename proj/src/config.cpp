#include "epnr/config.hpp"

#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string_view>

namespace epnr {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const json& obj, const char* key, T& target, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type (" + obj.at(key).dump() + ")");
    }
}

template <class T>
void read_optional(const json& obj, const char* key, std::optional<T>& target, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return;
    T value{};
    read(obj, key, value, where);
    target = value;
}

void read_kind_table(const json& obj, KindStateTable& table, const std::string& where) {
    reject_unknown(obj, {"substation", "transmission", "distribution"}, where);
    for (std::size_t k = 0; k < kComponentKinds; ++k) {
        const auto name = std::string(to_string(static_cast<ComponentKind>(k)));
        std::vector<double> row;
        if (!obj.contains(name)) continue;
        read(obj, name.c_str(), row, where);
        if (row.size() != kDamageStates)
            throw ConfigError(where + "." + name + ": expected " + std::to_string(kDamageStates) + " values");
        std::copy(row.begin(), row.end(), table[k].begin());
    }
}

SelectorConfig parse_selector(const json& item, const std::string& where) {
    if (item.is_string()) return default_selector(selector_kind_from_string(item.get<std::string>()));
    reject_unknown(item, {"kind", "label", "horizon", "alpha_tilde", "beta", "b_star", "budget", "threads"}, where);
    if (!item.contains("kind")) throw ConfigError(where + ": missing 'kind'");
    std::string kind;
    read(item, "kind", kind, where);
    SelectorConfig s = default_selector(selector_kind_from_string(kind));
    read(item, "label", s.label, where);
    read(item, "horizon", s.horizon, where);
    read(item, "alpha_tilde", s.alpha_tilde, where);
    read(item, "beta", s.beta, where);
    read(item, "b_star", s.b_star, where);
    read_optional(item, "budget", s.budget, where);
    read(item, "threads", s.threads, where);
    return s;
}

}  // namespace

RunConfig parse_config(const json& doc) {
    RunConfig c;
    reject_unknown(doc,
                   {"network", "fragility", "repair_days", "objective", "zeta", "gamma", "reward_unit_days",
                    "selectors", "scenarios", "seed", "jobs", "out", "scenario_file", "deterministic", "n_units",
                    "ru_fraction", "ru_round_up"},
                   "config");

    if (doc.contains("network")) {
        const auto& n = doc.at("network");
        reject_unknown(n, {"preset", "cells", "transmission_len", "segment_spacing_m", "cell_size_m", "columns",
                           "populations", "file"},
                       "network");
        read(n, "preset", c.network.preset, "network");
        read(n, "cells", c.network.cells, "network");
        read(n, "transmission_len", c.network.transmission_len, "network");
        read(n, "segment_spacing_m", c.network.segment_spacing_m, "network");
        read(n, "cell_size_m", c.network.layout.cell_size_m, "network");
        read(n, "columns", c.network.layout.columns, "network");
        read(n, "populations", c.network.populations, "network");
        std::optional<std::string> file;
        read_optional(n, "file", file, "network");
        if (file) c.network.file = *file;
        if (!n.contains("preset") && (n.contains("cells") || n.contains("populations")))
            c.network.preset = "custom";
    }
    if (doc.contains("fragility")) read_kind_table(doc.at("fragility"), c.fragility.mass, "fragility");
    if (doc.contains("repair_days")) read_kind_table(doc.at("repair_days"), c.repair.mean_days, "repair_days");

    if (doc.contains("objective")) {
        std::string objective;
        read(doc, "objective", objective, "config");
        if (objective == "r1") {
            c.reward.objective = Objective::R1;
        } else if (objective == "r2") {
            c.reward.objective = Objective::R2;
        } else {
            throw ConfigError("config.objective: expected 'r1' or 'r2', got '" + objective + "'");
        }
    }
    read(doc, "zeta", c.reward.zeta, "config");
    read(doc, "gamma", c.reward.gamma, "config");
    read(doc, "reward_unit_days", c.reward.unit_days, "config");

    if (doc.contains("selectors")) {
        const auto& list = doc.at("selectors");
        if (!list.is_array()) throw ConfigError("config.selectors: expected an array");
        c.selectors.clear();
        for (std::size_t i = 0; i < list.size(); ++i)
            c.selectors.push_back(parse_selector(list[i], "selectors[" + std::to_string(i) + "]"));
    }
    read(doc, "scenarios", c.scenarios, "config");
    read(doc, "seed", c.seed, "config");
    read(doc, "jobs", c.jobs, "config");
    std::string out;
    read(doc, "out", out, "config");
    if (!out.empty()) c.out = out;
    std::optional<std::string> scenario_file;
    read_optional(doc, "scenario_file", scenario_file, "config");
    if (scenario_file) c.scenario_file = *scenario_file;
    read(doc, "deterministic", c.deterministic, "config");
    read_optional(doc, "n_units", c.n_units, "config");
    read(doc, "ru_fraction", c.ru_fraction, "config");
    read(doc, "ru_round_up", c.ru_round_up, "config");

    validate_config(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

void validate_config(const RunConfig& c) {
    c.reward.validate();
    c.fragility.validate();
    c.repair.validate();
    if (c.selectors.empty()) throw ConfigError("config.selectors: at least one selector is required");
    for (const auto& s : c.selectors) s.validate();
    for (std::size_t i = 0; i < c.selectors.size(); ++i)
        for (std::size_t j = i + 1; j < c.selectors.size(); ++j)
            if (c.selectors[i].name() == c.selectors[j].name())
                throw ConfigError("config.selectors: duplicate selector name '" + c.selectors[i].name() + "'");
    if (c.scenarios < 1 && !c.scenario_file) throw ConfigError("config.scenarios must be >= 1");
    if (c.jobs < 1) throw ConfigError("config.jobs must be >= 1");
    if (c.n_units && *c.n_units < 1) throw ConfigError("config.n_units must be >= 1");
    if (!(c.ru_fraction > 0.0 && c.ru_fraction <= 1.0)) throw ConfigError("config.ru_fraction must lie in (0, 1]");
    const auto& p = c.network.preset;
    if (p != "desk" && p != "gilroy" && p != "custom")
        throw ConfigError("network.preset: expected desk, gilroy or custom, got '" + p + "'");
}

Network build_network(const RunConfig& config) {
    if (config.network.file) {
        std::ifstream in(*config.network.file);
        if (!in) throw ConfigError("cannot open network file " + config.network.file->string());
        try {
            return network_from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("network file " + config.network.file->string() + ": " + e.what());
        }
    }
    if (config.network.preset == "desk") return desk_network();
    if (config.network.preset == "gilroy") return gilroy_like_network();
    const auto& n = config.network;
    std::vector<std::int64_t> pops = n.populations;
    if (pops.empty()) pops.assign(static_cast<std::size_t>(std::max(n.cells, 0)), 1000);
    return build_synthetic_network(n.cells, n.transmission_len, n.segment_spacing_m, pops, n.layout);
}

std::vector<DamageScenario> make_scenarios(const RunConfig& config, const Network& net) {
    if (config.scenario_file) return load_scenarios(*config.scenario_file, net.size());
    std::vector<DamageScenario> out;
    for (int j = 0; j < config.scenarios; ++j)
        out.push_back(sample_scenario(net, config.fragility, config.repair,
                                      derive_seed(config.seed, 0x5ce7a410ULL, static_cast<std::uint64_t>(j))));
    return out;
}

}  // namespace epnr
