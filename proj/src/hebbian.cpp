#include "bucketnet/hebbian.hpp"

#include <charconv>
#include <cmath>
#include <ctime>

#include "bucketnet/error.hpp"

namespace bucketnet {

std::string format_iso8601(Timestamp t) {
    std::time_t raw = static_cast<std::time_t>(t);
    std::tm utc{};
    gmtime_r(&raw, &utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

std::string format_weight(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) return std::to_string(value);
    return std::string(buf, end);
}

void ReinforcementConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(frequency) || !positive(symmetry) || !positive(transitivity)) {
        throw Error(ErrorCode::InvalidConfig, "reinforcement constants must be > 0");
    }
}

std::string_view to_string(Rule rule) {
    switch (rule) {
        case Rule::Frequency: return "frequency";
        case Rule::Symmetry: return "symmetry";
        case Rule::Transitivity: return "transitivity";
    }
    return "unknown";
}

void WeightLedger::record(std::span<const Reinforcement> applied) {
    if (applied.empty()) return;
    ++hop_count;
    for (const auto& r : applied) {
        compensated_add(learned_weight, learned_carry, r.delta);
        if (r.rule == Rule::Transitivity) ++transitive_hops;
    }
}

double WeightLedger::identity_residual(const ReinforcementConfig& config) const {
    return (learned_weight - (config.frequency + config.symmetry) * static_cast<double>(hop_count) -
            config.transitivity * static_cast<double>(transitive_hops)) +
           learned_carry;
}

std::vector<Reinforcement> apply_event(const TraversalEvent& event, SessionState& session,
                                       LinkGraph& graph, const ReinforcementConfig& config) {
    if (event.session_id != session.id) {
        throw Error(ErrorCode::SessionMismatch, event.session_id + " vs " + session.id);
    }
    if (!graph.contains(event.to)) throw Error(ErrorCode::UnknownBucket, event.to.str());

    std::vector<Reinforcement> applied;
    if (!event.from) {
        session.previous = event.to;
        session.pre_previous.reset();
        session.last_activity = event.at;
        return applied;
    }

    const BucketId& from = *event.from;
    const BucketId& to = event.to;
    if (from == to) throw Error(ErrorCode::SelfHop, from.str());
    if (!graph.contains(from)) throw Error(ErrorCode::UnknownBucket, from.str());

    applied.push_back({from, to, config.frequency, Rule::Frequency});
    applied.push_back({to, from, config.symmetry, Rule::Symmetry});
    // The transitive chain only extends a contiguous walk: the remembered
    // two-step history must end where this hop starts.
    if (session.previous == from && session.pre_previous && *session.pre_previous != to &&
        graph.contains(*session.pre_previous)) {
        applied.push_back({*session.pre_previous, to, config.transitivity, Rule::Transitivity});
    }

    for (const auto& r : applied) graph.reinforce(r.source, r.target, r.delta);

    session.pre_previous = from;
    session.previous = to;
    session.last_activity = event.at;
    return applied;
}

SessionRegistry::SessionRegistry(Timestamp ttl_seconds) : ttl_(ttl_seconds) {
    if (ttl_seconds <= 0) throw Error(ErrorCode::InvalidConfig, "session ttl must be > 0");
}

SessionState& SessionRegistry::session_for(const std::string& id, Timestamp now) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        it = sessions_.emplace(id, SessionState{id, std::nullopt, std::nullopt, now}).first;
    } else if (now - it->second.last_activity > ttl_) {
        it->second = SessionState{id, std::nullopt, std::nullopt, now};
    }
    it->second.last_activity = now;
    return it->second;
}

const SessionState* SessionRegistry::find(const std::string& id) const {
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : &it->second;
}

std::size_t SessionRegistry::expire(Timestamp now) {
    return std::erase_if(sessions_, [&](const auto& entry) {
        return now - entry.second.last_activity > ttl_;
    });
}

TraversalEstimate estimate_traversals(const WeightLedger& ledger, const ReinforcementConfig& config,
                                      std::optional<double> per_hop) {
    const double divisor =
        per_hop.value_or(config.frequency + config.symmetry + config.transitivity);
    if (!(divisor > 0.0)) throw Error(ErrorCode::InvalidParameters, "per-hop weight must be > 0");
    TraversalEstimate result;
    result.estimate = std::llround(ledger.learned_weight / divisor);
    if (ledger.hop_count > 0) result.exact_hops = ledger.hop_count;
    return result;
}

std::string format_audit_line(Timestamp at, std::string_view session_id, const Reinforcement& r) {
    std::string line = format_iso8601(at);
    line += '\t';
    line += session_id;
    line += '\t';
    line += r.source.str();
    line += '\t';
    line += r.target.str();
    line += '\t';
    line += format_weight(r.delta);
    line += '\t';
    line += to_string(r.rule);
    return line;
}

void AuditLog::append(Timestamp at, std::string_view session_id,
                      std::span<const Reinforcement> applied) {
    for (const auto& r : applied) {
        *out_ << format_audit_line(at, session_id, r) << '\n';
        ++lines_;
    }
    out_->flush();
}

}  // namespace bucketnet
