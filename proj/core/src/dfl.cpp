#include "augmix/dfl.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <thread>

namespace augmix {

TopologyKind topology_kind_from_string(const std::string& s) {
    if (s == "fully") return TopologyKind::Fully;
    if (s == "ring") return TopologyKind::Ring;
    if (s == "star") return TopologyKind::Star;
    throw std::invalid_argument("unknown topology kind: " + s);
}

std::string to_string(TopologyKind k) {
    switch (k) {
        case TopologyKind::Fully: return "fully";
        case TopologyKind::Ring: return "ring";
        case TopologyKind::Star: return "star";
    }
    return "?";
}

size_t Topology::edge_count() const {
    size_t deg = 0;
    for (const auto& nb : adjacency) deg += nb.size();
    return deg / 2;
}

Topology build_topology(TopologyKind kind, int n) {
    int min_n = kind == TopologyKind::Ring ? 3 : 2;
    if (n < min_n)
        throw std::invalid_argument("build_topology: need n >= " + std::to_string(min_n) +
                                    " for " + to_string(kind));
    Topology t;
    t.kind = kind;
    t.n = n;
    t.adjacency.resize(n);
    switch (kind) {
        case TopologyKind::Fully:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) t.adjacency[i].push_back(j);
            break;
        case TopologyKind::Ring:
            for (int i = 0; i < n; ++i) {
                t.adjacency[i].push_back((i + n - 1) % n);
                t.adjacency[i].push_back((i + 1) % n);
                std::sort(t.adjacency[i].begin(), t.adjacency[i].end());
            }
            break;
        case TopologyKind::Star:
            for (int i = 1; i < n; ++i) {
                t.adjacency[0].push_back(i);
                t.adjacency[i].push_back(0);
            }
            break;
    }
    return t;
}

bool membership_query(const Topology& topology,
                      const std::vector<Participant>& participants, int entry_id,
                      PHash64 h, QueryStats* stats) {
    if (entry_id < 0 || entry_id >= topology.n)
        throw std::invalid_argument("membership_query: bad entry participant");
    if (stats) stats->messages = 0;

    if (lookup(participants[entry_id].index, h)) return true;

    // Flood in deterministic id order; each participant processes the
    // query_id once and forwards once.
    std::vector<char> seen(topology.n, 0);
    seen[entry_id] = 1;
    std::deque<int> frontier{entry_id};
    bool found = false;
    while (!frontier.empty()) {
        int cur = frontier.front();
        frontier.pop_front();
        for (int nb : topology.adjacency[cur]) {
            if (seen[nb]) continue;
            if (stats) stats->messages++;
            seen[nb] = 1;
            if (lookup(participants[nb].index, h)) found = true;
            frontier.push_back(nb);
        }
    }
    return found;
}

void run_federated_training(
    const Topology& topology, std::vector<Participant>& participants, int rounds,
    const TrainConfig& cfg,
    const std::function<void(int, const std::vector<Participant>&)>& on_round) {
    if (static_cast<int>(participants.size()) != topology.n)
        throw std::invalid_argument("run_federated_training: participant count mismatch");

    // Per-participant momentum buffers persist across rounds; averaging
    // replaces the weights but local optimizer state is local state.
    std::vector<std::vector<float>> velocity(topology.n);

    for (int round = 0; round < rounds; ++round) {
        // Local training, one thread per participant.
        std::vector<ModelParams> trained(topology.n);
        {
            std::vector<std::thread> workers;
            for (int i = 0; i < topology.n; ++i)
                workers.emplace_back([&, i] {
                    TrainConfig local = cfg;
                    local.seed = cfg.seed ^ (uint64_t(round) << 32) ^ uint64_t(i);
                    trained[i] = train_local(participants[i].model,
                                             participants[i].train_inputs,
                                             participants[i].train_labels, local,
                                             &velocity[i]);
                });
            for (auto& w : workers) w.join();
        }

        // Synchronous exchange: closed-neighborhood averaging. Members are
        // averaged in ascending id order so equal neighborhoods give
        // bit-identical results regardless of who computes them.
        for (int i = 0; i < topology.n; ++i) {
            std::vector<int> ids{i};
            ids.insert(ids.end(), topology.adjacency[i].begin(), topology.adjacency[i].end());
            std::sort(ids.begin(), ids.end());
            std::vector<ModelParams> group;
            for (int id : ids) group.push_back(trained[id]);
            participants[i].model = average_models(group);
        }

        if (on_round) on_round(round, participants);
    }
}

}  // namespace augmix
