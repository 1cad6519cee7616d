#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bucketnet/bucket_store.hpp"
#include "bucketnet/hebbian.hpp"
#include "bucketnet/link_graph.hpp"

namespace bucketnet {

nlohmann::json ledger_to_json(const WeightLedger& ledger);
WeightLedger ledger_from_json(const nlohmann::json& j);

struct DriverOptions {
    ReinforcementConfig reinforcement;
    Timestamp session_ttl = 1800;
    /// Source of "now" for session expiry and audit timestamps.
    std::function<Timestamp()> clock;
};

/// A link as shown in a bucket's display.
struct DisplayedLink {
    BucketId target;
    std::string display_name;
    double weight = 0.0;
};

struct DisplaySnapshot {
    BucketRecord record;
    std::vector<DisplayedLink> links;  // ranked_links order
};

struct HopOutcome {
    TraversalEvent event;
    std::vector<Reinforcement> applied;
};

/// Single writer over one bucket network. Every mutation of the graph,
/// session table, ledger and store happens under one mutex; after each
/// applied event the touched buckets and the ledger are committed together
/// and the reinforcements are appended to the audit log.
///
/// Without a store the driver runs purely in memory.
class NetworkDriver {
public:
    /// Opens (and recovers) the store at `data_dir`.
    NetworkDriver(const std::filesystem::path& data_dir, DriverOptions options = {});
    /// In-memory driver over an existing graph. `audit`, when given, receives
    /// the audit lines and must outlive the driver.
    NetworkDriver(LinkGraph graph, DriverOptions options = {}, std::ostream* audit = nullptr);

    NetworkDriver(const NetworkDriver&) = delete;
    NetworkDriver& operator=(const NetworkDriver&) = delete;

    bool contains(const BucketId& bucket) const;

    /// Opens the session at `bucket` if it has no history yet; otherwise a
    /// plain display leaves the session untouched.
    void enter(const std::string& session_id, const BucketId& bucket);

    /// Traversal to `to`. `from` defaults to the session's previous bucket;
    /// with neither, the hop is a session-opening entry at `to`.
    HopOutcome traverse(const std::string& session_id, const std::optional<BucketId>& from,
                        const BucketId& to);

    DisplaySnapshot display(const BucketId& bucket) const;

    /// Adds an element to a bucket; a weighted bucket link also becomes a
    /// graph edge. Persists immediately.
    void add_element(const BucketId& bucket, Element element);

    LinkGraph graph_snapshot() const;
    WeightLedger ledger() const;
    const ReinforcementConfig& reinforcement() const { return options_.reinforcement; }
    std::optional<SessionState> session(const std::string& session_id) const;

    /// Writes every bucket and the ledger.
    void flush();

    std::string issue_session_token();

    bool persistent() const { return store_ != nullptr; }

private:
    Timestamp now() const;
    std::string title_of(const BucketId& id) const;
    void persist(const std::set<BucketId>& dirty);

    mutable std::mutex mutex_;
    DriverOptions options_;
    std::unique_ptr<BucketStore> store_;
    LinkGraph graph_;
    std::map<BucketId, BucketRecord> memory_records_;  // without a store
    SessionRegistry sessions_;
    WeightLedger ledger_;
    std::ofstream audit_file_;
    std::ostream* audit_ = nullptr;
    std::mt19937_64 token_rng_;
};

}  // namespace bucketnet
