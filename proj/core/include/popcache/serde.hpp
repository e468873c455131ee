#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "popcache/oracle.hpp"
#include "popcache/placement.hpp"
#include "popcache/search.hpp"
#include "popcache/simulate.hpp"
#include "popcache/system.hpp"
#include "popcache/types.hpp"

namespace popcache {

// External configuration object: SystemConfig fields plus run parameters.
// lambda is optional; when absent the largest feasible value is chosen.
struct RunSpec {
    std::int64_t N = 0;
    std::int64_t K = 0;
    std::int64_t K_T = 0;
    double gamma = 0.0;
    double gamma_T = 0.0;
    std::int64_t F = 0;
    std::optional<std::int64_t> lambda;
    double alpha = 0.0;
    std::int64_t trials = 1000;
    std::uint64_t seed = 1;
};

RunSpec parse_run_spec(const nlohmann::json& j);
SystemConfig to_config(const RunSpec& spec);

std::string to_string(ClampLabel label);

void to_json(nlohmann::json& j, const SystemConfig& cfg);
void to_json(nlohmann::json& j, const Segmentation& seg);
void to_json(nlohmann::json& j, const MemoryShare& s);
void to_json(nlohmann::json& j, const RedundancyAllocation& alloc);
void to_json(nlohmann::json& j, const Solution& sol);
void to_json(nlohmann::json& j, const SearchTrace& trace);
void to_json(nlohmann::json& j, const SimulationReport& rep);
void to_json(nlohmann::json& j, const DominanceReport& rep);
void to_json(nlohmann::json& j, const TransmitterPlacement& p);
void to_json(nlohmann::json& j, const ReceiverPlacement& p);

}  // namespace popcache
