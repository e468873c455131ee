#pragma once

#include <cstdint>
#include <vector>

#include "popcache/system.hpp"
#include "popcache/types.hpp"

namespace popcache {

struct FileShare {
    std::int64_t file = 0;    // 1-based file index
    double fraction = 1.0;    // part of the file stored (memory-sharing split)
};

struct TransmitterPlacement {
    std::vector<std::vector<FileShare>> per_tx;  // per_tx[t] = shares held by transmitter t+1
    std::vector<std::int64_t> cursor_trace;      // first transmitter used by each sub-library
    std::vector<double> loads;                   // file-units per transmitter
    double capacity = 0.0;                       // gamma_T * N
};

// Cyclic sweep: each file occupies the next `level` transmitters around the
// ring, continuing from the transmitter after the last one used. Fractional
// levels place the two split parts as consecutive virtual files.
TransmitterPlacement place_transmitters(const SystemConfig& cfg, const Segmentation& seg,
                                        const RedundancyAllocation& alloc);

struct ReceiverPlacement {
    std::int64_t num_subfiles = 0;                         // C(Lambda, Lambda*gamma)
    std::vector<std::vector<int>> tau_sets;                // subfile index sets over [Lambda]
    std::vector<std::vector<std::int64_t>> cache_subfiles; // per cache: subfile ids it stores
    std::vector<int> user_to_cache;                        // user k -> cache (round robin)
};

// Grouped receiver placement: Lambda distinct caches, cache l storing every
// subfile whose index set contains l; users assigned round-robin.
ReceiverPlacement place_receivers(const SystemConfig& cfg);

}  // namespace popcache
