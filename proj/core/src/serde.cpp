#include "popcache/serde.hpp"

#include "popcache/errors.hpp"

namespace popcache {

using nlohmann::json;

RunSpec parse_run_spec(const json& j) {
    if (!j.is_object()) throw InvalidParameterError("config: expected a JSON object");
    auto need = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end())
            throw InvalidParameterError(std::string("config: missing key '") + key + "'");
        return *it;
    };
    RunSpec s;
    s.N = need("N").get<std::int64_t>();
    s.K = need("K").get<std::int64_t>();
    s.K_T = need("K_T").get<std::int64_t>();
    s.gamma = need("gamma").get<double>();
    s.gamma_T = need("gamma_T").get<double>();
    s.F = need("F").get<std::int64_t>();
    if (auto it = j.find("lambda"); it != j.end() && !it->is_null())
        s.lambda = it->get<std::int64_t>();
    if (auto it = j.find("alpha"); it != j.end()) s.alpha = it->get<double>();
    if (auto it = j.find("trials"); it != j.end()) s.trials = it->get<std::int64_t>();
    if (auto it = j.find("seed"); it != j.end()) s.seed = it->get<std::uint64_t>();
    return s;
}

SystemConfig to_config(const RunSpec& spec) {
    std::int64_t lambda =
        spec.lambda ? *spec.lambda : choose_lambda(spec.gamma, spec.F, spec.K);
    return make_config(spec.N, spec.K, spec.K_T, spec.gamma, spec.gamma_T, spec.F, lambda);
}

std::string to_string(ClampLabel label) {
    switch (label) {
        case ClampLabel::Broadcast: return "broadcast";
        case ClampLabel::Lower: return "lower";
        case ClampLabel::Upper: return "upper";
        case ClampLabel::Interior: return "interior";
    }
    return "?";
}

void to_json(json& j, const SystemConfig& cfg) {
    j = json{{"N", cfg.N},          {"K", cfg.K},   {"K_T", cfg.K_T},
             {"gamma", cfg.gamma},  {"gamma_T", cfg.gamma_T},
             {"lambda", cfg.Lambda}, {"F", cfg.F},  {"L", cfg.L}};
}

void to_json(json& j, const Segmentation& seg) {
    j = json{{"Q", seg.Q}, {"n", seg.bounds}};
}

void to_json(json& j, const MemoryShare& s) {
    j = json{{"lo", s.lo}, {"hi", s.hi}, {"frac_hi", s.frac_hi}};
}

void to_json(json& j, const RedundancyAllocation& alloc) {
    json labels = json::array();
    for (ClampLabel l : alloc.labels) labels.push_back(to_string(l));
    j = json{{"levels", alloc.levels},
             {"labels", labels},
             {"splits", alloc.splits},
             {"budget_used", alloc.budget_used},
             {"budget_tight", alloc.budget_tight}};
}

void to_json(json& j, const Solution& sol) {
    j = json{{"segmentation", sol.seg},
             {"allocation", sol.alloc},
             {"expected_delay", sol.expected_delay},
             {"uniform_delay", sol.uniform_delay},
             {"gain", sol.gain}};
}

void to_json(json& j, const SearchTrace& trace) {
    json per_q = json::array();
    for (const QCandidate& c : trace.best_per_q)
        per_q.push_back(json{{"Q", c.Q}, {"n", c.bounds}, {"delay", c.delay}});
    j = json{{"evaluations", trace.evaluations}, {"q_star", trace.q_star}, {"per_q", per_q}};
}

void to_json(json& j, const SimulationReport& rep) {
    j = json{{"trials", rep.trials},
             {"delay_mean", rep.delay_mean},
             {"delay_std", rep.delay_std},
             {"dof_mean", rep.dof_mean},
             {"dof_std", rep.dof_std},
             {"seed", rep.seed},
             {"strict_b1", rep.strict_b1},
             {"degenerate_std", rep.degenerate_std}};
}

void to_json(json& j, const DominanceReport& rep) {
    j = json{{"checked", rep.checked},
             {"violations", rep.violations},
             {"worst_gap", rep.worst_gap},
             {"seed", rep.seed},
             {"exhaustive", rep.exhaustive},
             {"swap_checked", rep.swap_checked},
             {"swap_violations", rep.swap_violations}};
}

void to_json(json& j, const TransmitterPlacement& p) {
    json txs = json::array();
    for (const auto& shares : p.per_tx) {
        json one = json::array();
        for (const FileShare& s : shares)
            one.push_back(json{{"file", s.file}, {"fraction", s.fraction}});
        txs.push_back(std::move(one));
    }
    j = json{{"per_tx", std::move(txs)},
             {"cursor_trace", p.cursor_trace},
             {"loads", p.loads},
             {"capacity", p.capacity}};
}

void to_json(json& j, const ReceiverPlacement& p) {
    j = json{{"num_subfiles", p.num_subfiles},
             {"tau_sets", p.tau_sets},
             {"cache_subfiles", p.cache_subfiles},
             {"user_to_cache", p.user_to_cache}};
}

}  // namespace popcache
