#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bucketnet/bucket_store.hpp"
#include "bucketnet/hebbian.hpp"
#include "bucketnet/link_graph.hpp"
#include "bucketnet/path_weight.hpp"

namespace bucketnet {

/// mt19937_64 with distribution mappings written out by hand, so a seed
/// reproduces the same stream with any standard library.
class SimRng {
public:
    explicit SimRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);
    bool bernoulli(double p) { return uniform() < p; }
    /// Number of trials up to and including the first success; mean 1/p.
    std::size_t geometric(double p);

private:
    std::mt19937_64 engine_;
};

/// Derives well-separated child seeds from a parent seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------

struct NetworkParams {
    std::size_t buckets = 150;
    std::size_t links_per_bucket = 3;
    double initial_weight = 0.5;
    std::uint64_t seed = 1;
};

struct InitializedNetwork {
    std::vector<BucketRecord> records;
    LinkGraph graph;
};

/// Ids b001..bNNN (zero-padded); bucket k is titled "Bucket k". Each bucket
/// links to `links_per_bucket` distinct other buckets chosen uniformly.
/// Throws InvalidParameters unless buckets > links_per_bucket >= 1 and
/// initial_weight > 0.
InitializedNetwork init_network(const NetworkParams& params);

std::vector<BucketId> generate_bucket_ids(std::size_t n);

// ---------------------------------------------------------------------------

struct AffinityParams {
    std::size_t genres = 10;
    double intra_low = 0.5;
    double intra_high = 1.0;
    double inter_low = 0.0;
    double inter_high = 0.1;
    std::uint64_t seed = 7;
};

/// Ground-truth relatedness: buckets fall into planted genres; pairs inside a
/// genre get high affinity, pairs across genres low affinity. Asymmetric.
class AffinityModel {
public:
    AffinityModel(std::vector<BucketId> buckets, BucketId portal, const AffinityParams& params);
    /// Dense construction from explicit values, for fixtures.
    AffinityModel(std::vector<BucketId> buckets, BucketId portal,
                  const std::map<std::pair<BucketId, BucketId>, double>& values);

    double affinity(const BucketId& from, const BucketId& to) const;
    const BucketId& portal() const { return portal_; }
    const std::vector<BucketId>& buckets() const { return buckets_; }
    std::optional<std::size_t> genre(const BucketId& bucket) const;

    /// affinity(portal, b) for every b != portal.
    std::map<BucketId, double> portal_affinity() const;

private:
    std::size_t index_of(const BucketId& id) const;

    std::vector<BucketId> buckets_;
    BucketId portal_;
    std::unordered_map<BucketId, std::size_t> index_;
    std::vector<std::size_t> genre_;
    std::vector<double> affinity_;  // row-major n x n
};

struct UserProfile {
    double adherence = 0.8;  // P(choose by affinity) vs uniformly at random
    double mean_session_length = 8.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// ---------------------------------------------------------------------------

/// Where simulated users navigate: either the engine in-process or a live
/// service over HTTP.
class NavigationBackend {
public:
    virtual ~NavigationBackend() = default;

    /// Links the user sees on `bucket`, in display order.
    virtual std::vector<RankedLink> displayed_links(const BucketId& bucket) = 0;
    /// Opens `session_id` at `portal`.
    virtual void enter(const std::string& session_id, const BucketId& portal, Timestamp at) = 0;
    /// Follows the displayed link from -> to.
    virtual std::vector<Reinforcement> hop(const std::string& session_id, const BucketId& from,
                                           const BucketId& to, Timestamp at) = 0;
};

/// Drives apply_event directly against a graph it does not own.
class EngineBackend : public NavigationBackend {
public:
    EngineBackend(LinkGraph& graph, ReinforcementConfig config, std::ostream* audit = nullptr);

    std::vector<RankedLink> displayed_links(const BucketId& bucket) override;
    void enter(const std::string& session_id, const BucketId& portal, Timestamp at) override;
    std::vector<Reinforcement> hop(const std::string& session_id, const BucketId& from,
                                   const BucketId& to, Timestamp at) override;

    const WeightLedger& ledger() const { return ledger_; }
    WeightLedger& ledger() { return ledger_; }

private:
    LinkGraph& graph_;
    ReinforcementConfig config_;
    std::unordered_map<std::string, SessionState> sessions_;
    WeightLedger ledger_;
    std::optional<AuditLog> audit_;
};

/// Navigates a live service at `base_url` (e.g. "http://127.0.0.1:8080").
class HttpBackend : public NavigationBackend {
public:
    explicit HttpBackend(const std::string& base_url);
    ~HttpBackend() override;

    std::vector<RankedLink> displayed_links(const BucketId& bucket) override;
    void enter(const std::string& session_id, const BucketId& portal, Timestamp at) override;
    std::vector<Reinforcement> hop(const std::string& session_id, const BucketId& from,
                                   const BucketId& to, Timestamp at) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Picks the next bucket among `links`: with probability `adherence`
/// proportionally to affinity(current, candidate) (uniformly if all are
/// zero), otherwise uniformly.
const BucketId& choose_next(const std::vector<RankedLink>& links, const BucketId& current,
                            const AffinityModel& model, double adherence, SimRng& rng);

/// One session from the portal. Length is geometric with the profile's mean;
/// `max_hops` truncates it. Returns every event, the opening entry included.
std::vector<TraversalEvent> run_session(const std::string& session_id, const UserProfile& user,
                                        SimRng& rng, const AffinityModel& model,
                                        NavigationBackend& backend, Timestamp start,
                                        std::optional<std::size_t> max_hops = std::nullopt);

// ---------------------------------------------------------------------------

struct EvaluationResult {
    double pearson = 0.0;
    double spearman = 0.0;
    double top_k_overlap = 0.0;
    std::size_t hierarchy_members = 0;
    std::map<BucketId, double> relationship;
};

/// Correlates relationship weights over the hierarchy rooted at the portal
/// with affinity(portal, .), and measures how many of the k heaviest
/// weighted-degree buckets are among the k most affine ones (portal excluded
/// from both). Throws InsufficientData when the hierarchy has fewer than
/// three members or no variation.
EvaluationResult evaluate(const LinkGraph& graph, const AffinityModel& model,
                          const HierarchyOptions& hierarchy = {}, std::size_t k = 8);

struct SimulationConfig {
    NetworkParams network;
    AffinityParams affinity;
    ReinforcementConfig reinforcement;
    HierarchyOptions hierarchy;
    std::size_t users = 15;
    /// Stop after this many sessions...
    std::optional<std::size_t> sessions;
    /// ...or once this many hops were made (the last session is truncated).
    std::optional<std::size_t> hops_target;
    double adherence = 0.8;
    double mean_session_length = 8.0;
    std::uint64_t user_seed = 11;
    std::size_t top_k = 8;
    Timestamp start_time = 1054425600;  // 2003-06-01T00:00:00Z
};

struct SimulationReport {
    std::size_t sessions = 0;
    std::size_t hops = 0;
    WeightLedger ledger;
    TraversalEstimate estimate;
    std::optional<EvaluationResult> evaluation;
    std::string evaluation_error;
    BucketId portal;
    bool portal_dominant = false;
};

nlohmann::json to_json(const SimulationReport& report);

/// Runs the configured sessions against `backend` and books every applied
/// reinforcement into the report's ledger. `snapshot` returns the network's
/// current graph; it is read before the first session and for the final
/// evaluation. Throws InsufficientData when there are no users.
SimulationReport run_simulation(const SimulationConfig& config, const AffinityModel& model,
                                NavigationBackend& backend, const std::function<LinkGraph()>& snapshot);

/// Convenience: fresh network from config.network, engine in-process.
struct SimulationOutcome {
    SimulationReport report;
    LinkGraph graph;
};
SimulationOutcome simulate_in_memory(const SimulationConfig& config, std::ostream* audit = nullptr);

}  // namespace bucketnet
