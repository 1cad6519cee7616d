#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bucketnet/bucket_id.hpp"
#include "bucketnet/link_graph.hpp"

namespace bucketnet {

/// Seconds since the Unix epoch.
using Timestamp = std::int64_t;

/// ISO-8601 UTC, second precision ("2003-06-01T12:00:00Z").
std::string format_iso8601(Timestamp t);

struct ReinforcementConfig {
    double frequency = 1.0;
    double symmetry = 0.5;
    double transitivity = 0.3;

    /// Throws InvalidConfig unless all three constants are strictly positive.
    void validate() const;
};

enum class Rule { Frequency, Symmetry, Transitivity };

std::string_view to_string(Rule rule);

/// One weight increment applied to the graph.
struct Reinforcement {
    BucketId source;
    BucketId target;
    double delta = 0.0;
    Rule rule = Rule::Frequency;

    friend bool operator==(const Reinforcement&, const Reinforcement&) = default;
};

/// Two-bucket memory of one navigating user.
struct SessionState {
    std::string id;
    std::optional<BucketId> previous;
    std::optional<BucketId> pre_previous;
    Timestamp last_activity = 0;
};

/// One hop. `from` is absent when the session opens at the portal.
struct TraversalEvent {
    std::string session_id;
    std::optional<BucketId> from;
    BucketId to;
    Timestamp at = 0;
};

/// Running account of learned weight against hop counts.
struct WeightLedger {
    double initial_weight = 0.0;
    double learned_weight = 0.0;
    std::int64_t hop_count = 0;
    std::int64_t transitive_hops = 0;
    /// Rounding error of learned_weight, carried by compensated summation so
    /// long runs stay exact to well below 1e-9.
    double learned_carry = 0.0;

    /// Books the reinforcements of one applied event.
    void record(std::span<const Reinforcement> applied);

    /// learned - (f + s) * hops - t * transitive_hops; zero when consistent.
    double identity_residual(const ReinforcementConfig& config) const;

    friend bool operator==(const WeightLedger&, const WeightLedger&) = default;
};

/// Applies the frequency, symmetry and transitivity rules for one event.
///
/// With `from` present the hop from->to reinforces from->to by `frequency`
/// and to->from by `symmetry`. If the session's previous hop ended at `from`
/// and started at some bucket other than `to`, that bucket's link to `to` is
/// reinforced by `transitivity`. Missing edges are created. The session then
/// remembers (from, to).
///
/// All preconditions are checked before the graph is touched, so an event
/// either lands completely or not at all.
std::vector<Reinforcement> apply_event(const TraversalEvent& event, SessionState& session,
                                       LinkGraph& graph, const ReinforcementConfig& config);

/// In-memory session table with idle expiry.
class SessionRegistry {
public:
    explicit SessionRegistry(Timestamp ttl_seconds = 1800);

    /// Live session for `id`, or a fresh one if unknown or idle longer than ttl.
    /// Marks the session active at `now`.
    SessionState& session_for(const std::string& id, Timestamp now);

    /// Peek without refreshing; nullptr if unknown.
    const SessionState* find(const std::string& id) const;

    /// Drops every session idle longer than ttl.
    std::size_t expire(Timestamp now);

    std::size_t size() const { return sessions_.size(); }
    Timestamp ttl() const { return ttl_; }

private:
    Timestamp ttl_;
    std::unordered_map<std::string, SessionState> sessions_;
};

struct TraversalEstimate {
    std::int64_t estimate = 0;
    std::optional<std::int64_t> exact_hops;
};

/// Estimates the number of direct traversals behind `ledger.learned_weight`
/// by dividing by a per-hop weight. The default divisor assumes every hop
/// also triggered transitivity (f + s + t).
TraversalEstimate estimate_traversals(const WeightLedger& ledger, const ReinforcementConfig& config,
                                      std::optional<double> per_hop = std::nullopt);

/// `timestamp \t session \t source \t target \t delta \t rule`
std::string format_audit_line(Timestamp at, std::string_view session_id, const Reinforcement& r);

class AuditLog {
public:
    explicit AuditLog(std::ostream& out) : out_(&out) {}

    void append(Timestamp at, std::string_view session_id, std::span<const Reinforcement> applied);
    std::size_t lines_written() const { return lines_; }

private:
    std::ostream* out_;
    std::size_t lines_ = 0;
};

/// Shortest decimal text that parses back to exactly `value`.
std::string format_weight(double value);

}  // namespace bucketnet
