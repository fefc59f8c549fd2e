#pragma once

#include <functional>
#include <string>
#include <vector>

#include "augmix/classifier.hpp"
#include "augmix/phash.hpp"

namespace augmix {

enum class TopologyKind { Fully, Ring, Star };

TopologyKind topology_kind_from_string(const std::string& s);
std::string to_string(TopologyKind k);

struct Topology {
    TopologyKind kind;
    int n = 0;
    std::vector<std::vector<int>> adjacency;  // symmetric, no self-loops
    size_t edge_count() const;
};

enum class ParticipantRole { Peer, Center, Leaf };

struct Participant {
    int id = -1;
    ParticipantRole role = ParticipantRole::Peer;
    std::vector<StandardizedImage> train_inputs;  // local partition, model-ready
    std::vector<int> train_labels;
    HashIndex index;  // built from the local partition
    ModelParams model;
};

Topology build_topology(TopologyKind kind, int n);

struct QueryStats {
    size_t messages = 0;  // one per (query_id, edge, direction)
};

/// Flooding membership lookup with per-participant dedup. Result is the OR
/// over every reached participant's local index; a local hit at the entry
/// sends zero messages.
bool membership_query(const Topology& topology,
                      const std::vector<Participant>& participants, int entry_id,
                      PHash64 h, QueryStats* stats = nullptr);

/// Synchronous round-based DFL: every participant trains locally, then
/// replaces its model with the mean over its closed neighborhood
/// (self + neighbors) of the post-training models. on_round fires after
/// each barrier with the freshly averaged models.
void run_federated_training(
    const Topology& topology, std::vector<Participant>& participants, int rounds,
    const TrainConfig& cfg,
    const std::function<void(int round, const std::vector<Participant>&)>& on_round =
        nullptr);

}  // namespace augmix
