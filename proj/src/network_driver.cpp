#include "bucketnet/network_driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "bucketnet/error.hpp"

namespace bucketnet {

nlohmann::json ledger_to_json(const WeightLedger& ledger) {
    return {{"initial_weight", ledger.initial_weight},
            {"learned_weight", ledger.learned_weight},
            {"hop_count", ledger.hop_count},
            {"transitive_hops", ledger.transitive_hops}};
}

WeightLedger ledger_from_json(const nlohmann::json& j) {
    WeightLedger ledger;
    ledger.initial_weight = j.at("initial_weight").get<double>();
    ledger.learned_weight = j.at("learned_weight").get<double>();
    ledger.hop_count = j.at("hop_count").get<std::int64_t>();
    ledger.transitive_hops = j.at("transitive_hops").get<std::int64_t>();
    return ledger;
}

namespace {

Timestamp system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

NetworkDriver::NetworkDriver(const std::filesystem::path& data_dir, DriverOptions options)
    : options_(std::move(options)),
      store_(std::make_unique<BucketStore>(data_dir)),
      sessions_(options_.session_ttl),
      token_rng_(std::random_device{}()) {
    options_.reinforcement.validate();
    store_->open();
    graph_ = store_->graph();
    if (auto text = store_->read_ledger()) {
        try {
            ledger_ = ledger_from_json(nlohmann::json::parse(*text));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::SchemaViolation, store_->ledger_path().string() + ": " + e.what());
        }
    } else {
        ledger_.initial_weight = graph_.total_weight();
    }
    audit_file_.open(store_->audit_path(), std::ios::app);
    if (!audit_file_) throw Error(ErrorCode::IoFailure, "cannot open " + store_->audit_path().string());
    audit_ = &audit_file_;
}

NetworkDriver::NetworkDriver(LinkGraph graph, DriverOptions options, std::ostream* audit)
    : options_(std::move(options)),
      graph_(std::move(graph)),
      sessions_(options_.session_ttl),
      audit_(audit),
      token_rng_(std::random_device{}()) {
    options_.reinforcement.validate();
    ledger_.initial_weight = graph_.total_weight();
    for (const auto& id : graph_.nodes()) memory_records_[id].id = id;
}

Timestamp NetworkDriver::now() const { return options_.clock ? options_.clock() : system_now(); }

bool NetworkDriver::contains(const BucketId& bucket) const {
    std::lock_guard lock(mutex_);
    return graph_.contains(bucket);
}

void NetworkDriver::enter(const std::string& session_id, const BucketId& bucket) {
    std::lock_guard lock(mutex_);
    if (!graph_.contains(bucket)) throw Error(ErrorCode::UnknownBucket, bucket.str());
    const Timestamp t = now();
    SessionState& session = sessions_.session_for(session_id, t);
    if (session.previous) return;
    apply_event(TraversalEvent{session_id, std::nullopt, bucket, t}, session, graph_,
                options_.reinforcement);
}

HopOutcome NetworkDriver::traverse(const std::string& session_id, const std::optional<BucketId>& from,
                                   const BucketId& to) {
    std::lock_guard lock(mutex_);
    const Timestamp t = now();
    SessionState& session = sessions_.session_for(session_id, t);
    HopOutcome outcome;
    outcome.event = TraversalEvent{session_id, from ? from : session.previous, to, t};

    const SessionState before = session;
    std::optional<LinkGraph> graph_before;
    if (store_) graph_before = graph_;

    outcome.applied = apply_event(outcome.event, session, graph_, options_.reinforcement);
    if (outcome.applied.empty()) return outcome;

    std::set<BucketId> dirty;
    for (const auto& r : outcome.applied) dirty.insert(r.source);
    const WeightLedger ledger_before = ledger_;
    ledger_.record(outcome.applied);

    if (store_) {
        std::map<BucketId, BucketRecord> records_before;
        for (const auto& id : dirty) records_before.emplace(id, store_->record(id));
        try {
            persist(dirty);
        } catch (...) {
            // Keep memory and disk agreeing: the event did not happen.
            graph_ = std::move(*graph_before);
            session = before;
            ledger_ = ledger_before;
            for (auto& [id, record] : records_before) store_->put(std::move(record));
            throw;
        }
    }
    if (audit_) {
        AuditLog log(*audit_);
        log.append(t, session_id, outcome.applied);
    }
    return outcome;
}

void NetworkDriver::persist(const std::set<BucketId>& dirty) {
    store_->apply_graph(graph_, dirty);
    store_->commit(dirty, ledger_to_json(ledger_).dump(2) + "\n");
}

std::string NetworkDriver::title_of(const BucketId& id) const {
    const BucketRecord* record = nullptr;
    if (store_ && store_->contains(id)) {
        record = &store_->record(id);
    } else if (auto it = memory_records_.find(id); it != memory_records_.end()) {
        record = &it->second;
    }
    return record && !record->title.empty() ? record->title : id.str();
}

DisplaySnapshot NetworkDriver::display(const BucketId& bucket) const {
    std::lock_guard lock(mutex_);
    if (!graph_.contains(bucket)) throw Error(ErrorCode::UnknownBucket, bucket.str());
    DisplaySnapshot snap;
    snap.record = store_ ? store_->record(bucket) : memory_records_.at(bucket);
    if (snap.record.title.empty()) snap.record.title = bucket.str();
    std::map<BucketId, std::string> names;
    for (const auto& e : snap.record.elements) {
        if (auto t = e.link_target(); t && !e.display_name.empty()) names.emplace(*t, e.display_name);
    }
    for (const auto& link : graph_.ranked_links(bucket)) {
        auto it = names.find(link.target);
        snap.links.push_back({link.target, it != names.end() ? it->second : title_of(link.target), link.weight});
    }
    return snap;
}

void NetworkDriver::add_element(const BucketId& bucket, Element element) {
    std::lock_guard lock(mutex_);
    if (!graph_.contains(bucket)) throw Error(ErrorCode::UnknownBucket, bucket.str());
    validate_element(element);
    const auto target = element.link_target();
    if (target) {
        if (!graph_.contains(*target)) {
            throw Error(ErrorCode::SchemaViolation, "link to nonexistent bucket '" + target->str() + "'");
        }
        if (*target == bucket) throw Error(ErrorCode::SchemaViolation, "bucket links to itself");
        if (graph_.has_link(bucket, *target)) {
            throw Error(ErrorCode::SchemaViolation, bucket.str() + " already links to " + target->str());
        }
    }

    if (store_) {
        BucketRecord before = store_->record(bucket);
        bucketnet::add_element(store_->mutable_record(bucket), element);
        try {
            store_->commit({bucket}, std::nullopt);
        } catch (...) {
            store_->put(std::move(before));
            throw;
        }
    } else {
        bucketnet::add_element(memory_records_.at(bucket), element);
    }
    if (target) {
        const double w = *element.weight;
        graph_.add_link(bucket, *target, w);
        // Authored links are part of the structure, not learned weight.
        ledger_.initial_weight += w;
        if (store_) store_->commit({}, ledger_to_json(ledger_).dump(2) + "\n");
    }
}

LinkGraph NetworkDriver::graph_snapshot() const {
    std::lock_guard lock(mutex_);
    return graph_;
}

WeightLedger NetworkDriver::ledger() const {
    std::lock_guard lock(mutex_);
    return ledger_;
}

std::optional<SessionState> NetworkDriver::session(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    if (const SessionState* s = sessions_.find(session_id)) return *s;
    return std::nullopt;
}

void NetworkDriver::flush() {
    std::lock_guard lock(mutex_);
    if (!store_) return;
    std::set<BucketId> all;
    for (const auto& id : graph_.nodes()) all.insert(id);
    store_->apply_graph(graph_, all);
    store_->commit_all(ledger_to_json(ledger_).dump(2) + "\n");
}

std::string NetworkDriver::issue_session_token() {
    std::lock_guard lock(mutex_);
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(token_rng_()),
                  static_cast<unsigned long long>(token_rng_()));
    return buf;
}

}  // namespace bucketnet
