#include "seqmem/config.hpp"

#include <algorithm>
#include <filesystem>
#include <initializer_list>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seqmem/errors.hpp"
#include "seqmem/util.hpp"

namespace seqmem {
namespace {

using nlohmann::json;

std::string joined(std::initializer_list<const char*> keys) {
    std::ostringstream out;
    bool first = true;
    for (const char* k : keys) {
        if (!first) out << ", ";
        out << k;
        first = false;
    }
    return out.str();
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> valid) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find_if(valid.begin(), valid.end(), [&](const char* v) {
                return key == v;
            }) == valid.end()) {
            throw ConfigError("unknown key '" + key + "' in " + path +
                              " (valid keys: " + joined(valid) + ")");
        }
    }
}

void require_object(const json& obj, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path + " must be an object");
}

template <typename T>
T get_field(const json& obj, const std::string& path, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for " + path + "." + key);
    }
}

template <typename T>
T get_required(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError("missing required key " + path + "." + key);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for " + path + "." + key);
    }
}

std::string stem_of(const std::string& path) {
    const std::string stem = std::filesystem::path(path).stem().string();
    return stem.empty() ? path : stem;
}

DatasetConfig parse_dataset(const json& obj, const std::string& path) {
    require_object(obj, path);
    check_keys(obj, path, {"path", "name", "order_seed"});
    DatasetConfig d;
    d.path = get_required<std::string>(obj, path, "path");
    d.name = get_field<std::string>(obj, path, "name", stem_of(d.path));
    if (obj.contains("order_seed")) {
        d.order_seed = get_field<std::uint64_t>(obj, path, "order_seed", 0);
    }
    return d;
}

SplitSpec parse_split(const json& obj, const std::string& path) {
    require_object(obj, path);
    check_keys(obj, path, {"mode", "fraction", "size", "seed"});
    SplitSpec spec;
    const std::string mode = get_field<std::string>(obj, path, "mode", "tail_fraction");
    if (mode == "tail_fraction") {
        spec.mode = SplitSpec::Mode::tail_fraction;
    } else if (mode == "stratified_sample") {
        spec.mode = SplitSpec::Mode::stratified_sample;
    } else {
        throw ConfigError("bad value for " + path +
                          ".mode (valid: tail_fraction, stratified_sample)");
    }
    spec.fraction = get_field<double>(obj, path, "fraction", spec.fraction);
    spec.size = get_field<int>(obj, path, "size", spec.size);
    spec.seed = get_field<std::uint64_t>(obj, path, "seed", spec.seed);
    if (spec.mode == SplitSpec::Mode::tail_fraction &&
        (spec.fraction <= 0.0 || spec.fraction >= 1.0)) {
        throw ConfigError("bad value for " + path + ".fraction (must be in (0, 1))");
    }
    if (spec.mode == SplitSpec::Mode::stratified_sample && spec.size < 1) {
        throw ConfigError("bad value for " + path + ".size (must be positive)");
    }
    return spec;
}

GatewayConfig parse_gateway(const json& obj, const std::string& path) {
    require_object(obj, path);
    check_keys(obj, path,
               {"backend", "rules", "default_response", "embedding_dim", "endpoint", "model",
                "embedding_model", "max_attempts", "backoff_initial_ms", "timeout_s",
                "embedding_dimension"});
    GatewayConfig g;
    const std::string backend = get_field<std::string>(obj, path, "backend", "scripted");
    if (backend == "scripted") {
        g.backend = GatewayConfig::Backend::scripted;
    } else if (backend == "echo") {
        g.backend = GatewayConfig::Backend::echo;
    } else if (backend == "http") {
        g.backend = GatewayConfig::Backend::http;
    } else {
        throw ConfigError("bad value for " + path + ".backend (valid: scripted, echo, http)");
    }
    if (obj.contains("rules")) {
        if (!obj["rules"].is_array()) throw ConfigError(path + ".rules must be an array");
        int i = 0;
        for (const json& r : obj["rules"]) {
            const std::string rpath = path + ".rules[" + std::to_string(i++) + "]";
            require_object(r, rpath);
            check_keys(r, rpath, {"contains", "response"});
            ScriptedRule rule;
            rule.contains = get_required<std::vector<std::string>>(r, rpath, "contains");
            rule.response = get_required<std::string>(r, rpath, "response");
            g.rules.push_back(std::move(rule));
        }
    }
    if (obj.contains("default_response")) {
        g.default_response = get_field<std::string>(obj, path, "default_response", "");
    }
    const int dim = get_field<int>(obj, path, "embedding_dim", 64);
    if (dim < 1) throw ConfigError("bad value for " + path + ".embedding_dim");
    g.embedding_dim = static_cast<std::size_t>(dim);

    g.http.endpoint = get_field<std::string>(obj, path, "endpoint", "");
    g.http.model = get_field<std::string>(obj, path, "model", g.http.model);
    g.http.embedding_model =
        get_field<std::string>(obj, path, "embedding_model", g.http.embedding_model);
    g.http.max_attempts = get_field<int>(obj, path, "max_attempts", g.http.max_attempts);
    g.http.backoff_initial_ms =
        get_field<int>(obj, path, "backoff_initial_ms", g.http.backoff_initial_ms);
    g.http.timeout_s = get_field<int>(obj, path, "timeout_s", g.http.timeout_s);
    g.http.embedding_dimension =
        get_field<int>(obj, path, "embedding_dimension", g.http.embedding_dimension);
    if (g.backend == GatewayConfig::Backend::http && g.http.endpoint.empty()) {
        throw ConfigError("missing required key " + path + ".endpoint for the http backend");
    }
    return g;
}

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    require_object(root, origin);
    check_keys(root, origin,
               {"dataset", "holdout", "ood_holdouts", "policy", "evaluator", "generation",
                "gateway", "schedule", "thresholds", "seed", "out_dir", "prompts_dir"});

    RunConfig cfg;
    if (!root.contains("dataset")) throw ConfigError("missing required key dataset");
    cfg.dataset = parse_dataset(root["dataset"], "dataset");

    if (root.contains("holdout") && !root["holdout"].is_null()) {
        cfg.holdout = parse_split(root["holdout"], "holdout");
    }
    if (root.contains("ood_holdouts")) {
        if (!root["ood_holdouts"].is_array()) {
            throw ConfigError("ood_holdouts must be an array");
        }
        int i = 0;
        for (const json& d : root["ood_holdouts"]) {
            cfg.ood_holdouts.push_back(
                parse_dataset(d, "ood_holdouts[" + std::to_string(i++) + "]"));
        }
    }

    if (root.contains("policy")) {
        const json& p = root["policy"];
        require_object(p, "policy");
        check_keys(p, "policy",
                   {"id", "k", "batch_update_size", "max_tries", "max_num_rules",
                    "induce_steps"});
        cfg.policy_id = get_field<std::string>(p, "policy", "id", cfg.policy_id);
        cfg.policy.k = get_field<int>(p, "policy", "k", cfg.policy.k);
        cfg.policy.batch_update_size =
            get_field<int>(p, "policy", "batch_update_size", cfg.policy.batch_update_size);
        cfg.policy.max_tries = get_field<int>(p, "policy", "max_tries", cfg.policy.max_tries);
        cfg.policy.max_num_rules =
            get_field<int>(p, "policy", "max_num_rules", cfg.policy.max_num_rules);
        cfg.policy.induce_steps =
            get_field<int>(p, "policy", "induce_steps", cfg.policy.induce_steps);
        const auto ids = policy_ids();
        if (std::find(ids.begin(), ids.end(), cfg.policy_id) == ids.end()) {
            std::ostringstream msg;
            msg << "bad value for policy.id '" << cfg.policy_id << "' (valid:";
            for (const auto& id : ids) msg << ' ' << id;
            msg << ')';
            throw ConfigError(msg.str());
        }
        const std::pair<const char*, int> positives[] = {
            {"k", cfg.policy.k},
            {"batch_update_size", cfg.policy.batch_update_size},
            {"max_tries", cfg.policy.max_tries},
            {"max_num_rules", cfg.policy.max_num_rules},
            {"induce_steps", cfg.policy.induce_steps}};
        for (const auto& [name, value] : positives) {
            if (value < 1) {
                throw ConfigError("bad value for policy." + std::string(name) +
                                  " (must be at least 1)");
            }
        }
    }

    if (root.contains("evaluator")) {
        const std::string name = get_field<std::string>(root, origin, "evaluator", "");
        try {
            cfg.evaluator = evaluator_from_string(name);
        } catch (const Error&) {
            throw ConfigError("bad value for evaluator '" + name +
                              "' (valid: exact_match, boxed_extract, option_letter)");
        }
    }

    if (root.contains("generation")) {
        const json& gen = root["generation"];
        require_object(gen, "generation");
        check_keys(gen, "generation", {"temperature", "max_tokens", "reasoning"});
        cfg.generation.temperature =
            get_field<double>(gen, "generation", "temperature", cfg.generation.temperature);
        cfg.generation.max_tokens =
            get_field<int>(gen, "generation", "max_tokens", cfg.generation.max_tokens);
        if (gen.contains("reasoning")) {
            const std::string r = get_field<std::string>(gen, "generation", "reasoning", "off");
            try {
                cfg.generation.reasoning = reasoning_from_string(r);
            } catch (const Error&) {
                throw ConfigError("bad value for generation.reasoning (valid: off, low, on)");
            }
        }
        if (cfg.generation.temperature < 0.0) {
            throw ConfigError("bad value for generation.temperature (must be >= 0)");
        }
        if (cfg.generation.max_tokens < 1) {
            throw ConfigError("bad value for generation.max_tokens (must be >= 1)");
        }
    }

    if (root.contains("gateway")) cfg.gateway = parse_gateway(root["gateway"], "gateway");

    if (root.contains("schedule")) {
        const json& s = root["schedule"];
        require_object(s, "schedule");
        check_keys(s, "schedule",
                   {"n_checkpoints", "horizons", "replay_budget", "max_in_flight",
                    "alternative_baseline"});
        cfg.schedule.n_checkpoints =
            get_field<int>(s, "schedule", "n_checkpoints", cfg.schedule.n_checkpoints);
        cfg.schedule.horizons =
            get_field<std::vector<int>>(s, "schedule", "horizons", cfg.schedule.horizons);
        cfg.schedule.replay_budget =
            get_field<long long>(s, "schedule", "replay_budget", cfg.schedule.replay_budget);
        cfg.schedule.max_in_flight =
            get_field<int>(s, "schedule", "max_in_flight", cfg.schedule.max_in_flight);
        cfg.schedule.alternative_baseline = get_field<bool>(
            s, "schedule", "alternative_baseline", cfg.schedule.alternative_baseline);
        if (cfg.schedule.n_checkpoints < 1) {
            throw ConfigError("bad value for schedule.n_checkpoints (must be >= 1)");
        }
        for (int t : cfg.schedule.horizons) {
            if (t < 1) throw ConfigError("bad value for schedule.horizons (must be positive)");
        }
        if (cfg.schedule.replay_budget < 0) {
            throw ConfigError("bad value for schedule.replay_budget (must be >= 0)");
        }
        if (cfg.schedule.max_in_flight < 1) {
            throw ConfigError("bad value for schedule.max_in_flight (must be >= 1)");
        }
    }

    if (root.contains("thresholds")) {
        const json& th = root["thresholds"];
        require_object(th, "thresholds");
        check_keys(th, "thresholds", {"high", "low", "early", "late", "flat_var"});
        cfg.thresholds.high = get_field<double>(th, "thresholds", "high", cfg.thresholds.high);
        cfg.thresholds.low = get_field<double>(th, "thresholds", "low", cfg.thresholds.low);
        cfg.thresholds.early =
            get_field<double>(th, "thresholds", "early", cfg.thresholds.early);
        cfg.thresholds.late = get_field<double>(th, "thresholds", "late", cfg.thresholds.late);
        cfg.thresholds.flat_var =
            get_field<double>(th, "thresholds", "flat_var", cfg.thresholds.flat_var);
    }

    cfg.seed = get_field<std::uint64_t>(root, origin, "seed", cfg.seed);
    cfg.out_dir = get_field<std::string>(root, origin, "out_dir", cfg.out_dir);
    if (root.contains("prompts_dir")) {
        cfg.prompts_dir = get_field<std::string>(root, origin, "prompts_dir", "");
    }
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file not found: " + path);
    }
    return parse_config_text(read_text_file(path), path);
}

void apply_overrides(RunConfig& config, const CliOverrides& overrides) {
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.n_checkpoints) {
        if (*overrides.n_checkpoints < 1) {
            throw ConfigError("--checkpoints must be at least 1");
        }
        config.schedule.n_checkpoints = *overrides.n_checkpoints;
    }
    if (overrides.horizons) {
        for (int t : *overrides.horizons) {
            if (t < 1) throw ConfigError("--horizons entries must be positive");
        }
        config.schedule.horizons = *overrides.horizons;
    }
    if (overrides.replay_budget) {
        if (*overrides.replay_budget < 0) {
            throw ConfigError("--replay-budget must be non-negative");
        }
        config.schedule.replay_budget = *overrides.replay_budget;
    }
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
}

std::unique_ptr<Gateway> make_gateway(const GatewayConfig& config) {
    switch (config.backend) {
        case GatewayConfig::Backend::scripted:
            return std::make_unique<ScriptedGateway>(config.rules, config.default_response,
                                                     config.embedding_dim);
        case GatewayConfig::Backend::echo:
            return std::make_unique<EchoGateway>(config.embedding_dim);
        case GatewayConfig::Backend::http:
            return std::make_unique<HttpGateway>(config.http);
    }
    throw ConfigError("unknown gateway backend");
}

PromptLibrary load_prompt_library(const RunConfig& config) {
    if (config.prompts_dir) return PromptLibrary::from_directory(*config.prompts_dir);
    return PromptLibrary::builtin();
}

} // namespace seqmem
