#include "bucketnet/simulator.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bucketnet/centrality.hpp"
#include "bucketnet/error.hpp"
#include "bucketnet/protocol.hpp"

namespace bucketnet {

std::size_t SimRng::below(std::size_t n) {
    if (n == 0) throw Error(ErrorCode::InvalidParameters, "below(0)");
    const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return std::min(k, n - 1);
}

std::size_t SimRng::geometric(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidParameters, "geometric p must be in (0,1]");
    std::size_t trials = 1;
    while (!bernoulli(p)) ++trials;
    return trials;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over seed and stream
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------

std::vector<BucketId> generate_bucket_ids(std::size_t n) {
    const std::size_t width = std::max<std::size_t>(3, std::to_string(n).size());
    std::vector<BucketId> ids;
    ids.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) {
        std::string digits = std::to_string(i);
        ids.emplace_back("b" + std::string(width - digits.size(), '0') + digits);
    }
    return ids;
}

InitializedNetwork init_network(const NetworkParams& params) {
    if (params.links_per_bucket < 1 || params.buckets <= params.links_per_bucket) {
        throw Error(ErrorCode::InvalidParameters, "need buckets > links_per_bucket >= 1");
    }
    if (!(params.initial_weight > 0.0) || !std::isfinite(params.initial_weight)) {
        throw Error(ErrorCode::InvalidParameters, "initial weight must be > 0");
    }

    const auto ids = generate_bucket_ids(params.buckets);
    auto title = [&](std::size_t i) { return "Bucket " + ids[i].str().substr(1); };

    InitializedNetwork net;
    for (const auto& id : ids) net.graph.add_node(id);

    SimRng rng(params.seed);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        BucketRecord record;
        record.id = ids[i];
        record.title = title(i);
        record.metadata.emplace_back("biography", "Generated content for " + record.title + ".");

        candidates.clear();
        for (std::size_t j = 0; j < ids.size(); ++j) {
            if (j != i) candidates.push_back(j);
        }
        for (std::size_t k = 0; k < params.links_per_bucket; ++k) {
            std::swap(candidates[k], candidates[k + rng.below(candidates.size() - k)]);
            const std::size_t j = candidates[k];
            net.graph.add_link(ids[i], ids[j], params.initial_weight);
            record.elements.push_back(Element{"link-" + ids[j].str(), ElementKind::Pointer, bucket_href(ids[j]),
                                              params.initial_weight, title(j)});
        }
        net.records.push_back(std::move(record));
    }
    return net;
}

// ---------------------------------------------------------------------------

AffinityModel::AffinityModel(std::vector<BucketId> buckets, BucketId portal, const AffinityParams& params)
    : buckets_(std::move(buckets)), portal_(std::move(portal)) {
    if (params.genres == 0) throw Error(ErrorCode::InvalidParameters, "genres must be >= 1");
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(params.intra_low) || !in_unit(params.intra_high) || !in_unit(params.inter_low) ||
        !in_unit(params.inter_high) || params.intra_low > params.intra_high ||
        params.inter_low > params.inter_high) {
        throw Error(ErrorCode::InvalidParameters, "affinity ranges must lie in [0,1]");
    }
    const std::size_t n = buckets_.size();
    for (std::size_t i = 0; i < n; ++i) index_.emplace(buckets_[i], i);
    if (!index_.count(portal_)) throw Error(ErrorCode::UnknownBucket, portal_.str());

    SimRng rng(params.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    genre_.assign(n, 0);
    for (std::size_t pos = 0; pos < n; ++pos) genre_[order[pos]] = pos % params.genres;

    affinity_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool same = genre_[i] == genre_[j];
            const double lo = same ? params.intra_low : params.inter_low;
            const double hi = same ? params.intra_high : params.inter_high;
            affinity_[i * n + j] = lo + (hi - lo) * rng.uniform();
        }
    }
}

AffinityModel::AffinityModel(std::vector<BucketId> buckets, BucketId portal,
                             const std::map<std::pair<BucketId, BucketId>, double>& values)
    : buckets_(std::move(buckets)), portal_(std::move(portal)) {
    const std::size_t n = buckets_.size();
    for (std::size_t i = 0; i < n; ++i) index_.emplace(buckets_[i], i);
    if (!index_.count(portal_)) throw Error(ErrorCode::UnknownBucket, portal_.str());
    genre_.assign(n, 0);
    affinity_.assign(n * n, 0.0);
    for (const auto& [pair, v] : values) {
        if (pair.first == pair.second || v < 0.0 || v > 1.0) {
            throw Error(ErrorCode::InvalidParameters, "affinity must be in [0,1] between distinct buckets");
        }
        affinity_[index_of(pair.first) * n + index_of(pair.second)] = v;
    }
}

std::size_t AffinityModel::index_of(const BucketId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownBucket, id.str());
    return it->second;
}

double AffinityModel::affinity(const BucketId& from, const BucketId& to) const {
    if (from == to) throw Error(ErrorCode::InvalidParameters, "affinity of a bucket to itself is undefined");
    return affinity_[index_of(from) * buckets_.size() + index_of(to)];
}

std::optional<std::size_t> AffinityModel::genre(const BucketId& bucket) const {
    auto it = index_.find(bucket);
    if (it == index_.end()) return std::nullopt;
    return genre_[it->second];
}

std::map<BucketId, double> AffinityModel::portal_affinity() const {
    std::map<BucketId, double> out;
    for (const auto& b : buckets_) {
        if (b != portal_) out[b] = affinity(portal_, b);
    }
    return out;
}

void UserProfile::validate() const {
    if (!(adherence >= 0.0 && adherence <= 1.0)) {
        throw Error(ErrorCode::InvalidParameters, "adherence must be in [0,1]");
    }
    if (!(mean_session_length >= 1.0)) {
        throw Error(ErrorCode::InvalidParameters, "mean session length must be >= 1");
    }
}

// ---------------------------------------------------------------------------

EngineBackend::EngineBackend(LinkGraph& graph, ReinforcementConfig config, std::ostream* audit)
    : graph_(graph), config_(config) {
    config_.validate();
    ledger_.initial_weight = graph_.total_weight();
    if (audit) audit_.emplace(*audit);
}

std::vector<RankedLink> EngineBackend::displayed_links(const BucketId& bucket) {
    return graph_.ranked_links(bucket);
}

void EngineBackend::enter(const std::string& session_id, const BucketId& portal, Timestamp at) {
    auto& session = sessions_[session_id];
    session.id = session_id;
    apply_event(TraversalEvent{session_id, std::nullopt, portal, at}, session, graph_, config_);
}

std::vector<Reinforcement> EngineBackend::hop(const std::string& session_id, const BucketId& from,
                                              const BucketId& to, Timestamp at) {
    auto& session = sessions_[session_id];
    session.id = session_id;
    auto applied = apply_event(TraversalEvent{session_id, from, to, at}, session, graph_, config_);
    ledger_.record(applied);
    if (audit_) audit_->append(at, session_id, applied);
    return applied;
}

struct HttpBackend::Impl {
    explicit Impl(const std::string& url) : client(url) {}
    httplib::Client client;
};

HttpBackend::HttpBackend(const std::string& base_url) : impl_(std::make_unique<Impl>(base_url)) {
    impl_->client.set_follow_location(false);
}

HttpBackend::~HttpBackend() = default;

namespace {

httplib::Result checked_get(httplib::Client& client, const std::string& path) {
    auto res = client.Get(path);
    if (!res) throw Error(ErrorCode::IoFailure, "GET " + path + ": " + httplib::to_string(res.error()));
    if (res->status >= 400) {
        throw Error(ErrorCode::IoFailure, "GET " + path + ": HTTP " + std::to_string(res->status) + " " + res->body);
    }
    return res;
}

Rule parse_rule(const std::string& name) {
    if (name == "frequency") return Rule::Frequency;
    if (name == "symmetry") return Rule::Symmetry;
    if (name == "transitivity") return Rule::Transitivity;
    throw Error(ErrorCode::SchemaViolation, "unknown rule '" + name + "'");
}

}  // namespace

std::vector<RankedLink> HttpBackend::displayed_links(const BucketId& bucket) {
    // No session: a sessionless display must not disturb the walker's state.
    auto res = checked_get(impl_->client, "/" + bucket.str() + "?method=display&format=json&session=_observer");
    const auto j = nlohmann::json::parse(res->body);
    std::vector<RankedLink> links;
    for (const auto& l : j.at("links")) {
        links.push_back({BucketId(l.at("target").get<std::string>()), l.at("weight").get<double>()});
    }
    return links;
}

void HttpBackend::enter(const std::string& session_id, const BucketId& portal, Timestamp) {
    checked_get(impl_->client, display_url(portal, session_id, ResponseFormat::Json));
}

std::vector<Reinforcement> HttpBackend::hop(const std::string& session_id, const BucketId& from,
                                            const BucketId& to, Timestamp) {
    auto res = checked_get(impl_->client, traversal_url(from, to, session_id, ResponseFormat::Json));
    if (res->status != 302) throw Error(ErrorCode::IoFailure, "traversal did not redirect");
    const auto j = nlohmann::json::parse(res->body);
    std::vector<Reinforcement> applied;
    for (const auto& r : j.at("applied")) {
        applied.push_back({BucketId(r.at("source").get<std::string>()), BucketId(r.at("target").get<std::string>()),
                           r.at("delta").get<double>(), parse_rule(r.at("rule").get<std::string>())});
    }
    // Land on the destination like a browser following the redirect.
    checked_get(impl_->client, j.at("redirect").get<std::string>());
    return applied;
}

// ---------------------------------------------------------------------------

const BucketId& choose_next(const std::vector<RankedLink>& links, const BucketId& current,
                            const AffinityModel& model, double adherence, SimRng& rng) {
    if (links.empty()) throw Error(ErrorCode::InvalidParameters, "no links to choose from");
    if (rng.bernoulli(adherence)) {
        std::vector<double> cumulative;
        cumulative.reserve(links.size());
        double total = 0.0;
        for (const auto& l : links) {
            total += model.affinity(current, l.target);
            cumulative.push_back(total);
        }
        if (total > 0.0) {
            const double pick = rng.uniform() * total;
            auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
            const auto index = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                                     links.size() - 1);
            return links[index].target;
        }
    }
    return links[rng.below(links.size())].target;
}

std::vector<TraversalEvent> run_session(const std::string& session_id, const UserProfile& user,
                                        SimRng& rng, const AffinityModel& model,
                                        NavigationBackend& backend, Timestamp start,
                                        std::optional<std::size_t> max_hops) {
    user.validate();
    const BucketId& portal = model.portal();
    std::size_t length = rng.geometric(1.0 / user.mean_session_length);
    if (max_hops) length = std::min(length, *max_hops);

    std::vector<TraversalEvent> events;
    Timestamp t = start;
    backend.enter(session_id, portal, t);
    events.push_back({session_id, std::nullopt, portal, t});

    BucketId current = portal;
    for (std::size_t hop = 0; hop < length; ++hop) {
        const auto links = backend.displayed_links(current);
        if (links.empty()) break;
        const BucketId next = choose_next(links, current, model, user.adherence, rng);
        t += 30;
        backend.hop(session_id, current, next, t);
        events.push_back({session_id, current, next, t});
        current = next;
    }
    return events;
}

// ---------------------------------------------------------------------------

EvaluationResult evaluate(const LinkGraph& graph, const AffinityModel& model,
                          const HierarchyOptions& hierarchy, std::size_t k) {
    const BucketId& portal = model.portal();
    const HierarchyTree tree = extract_hierarchy(graph, portal, hierarchy);
    if (tree.edge_count() == 0) {
        throw Error(ErrorCode::InsufficientData, "no link from the portal reaches the minimum weight");
    }
    EvaluationResult result;
    result.relationship = relationship_weights(normalize_weights(tree));
    result.hierarchy_members = result.relationship.size();
    const auto truth = model.portal_affinity();
    try {
        result.pearson = correlate(result.relationship, truth);
        result.spearman = rank_correlate(result.relationship, truth);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConstantSeries) throw Error(ErrorCode::InsufficientData, e.what());
        throw;
    }

    std::vector<BucketId> heaviest;
    for (const auto& score : rank_all(graph, CentralityMetric::Weighted)) {
        if (score.bucket == portal) continue;
        if (heaviest.size() == k) break;
        heaviest.push_back(score.bucket);
    }
    std::vector<std::pair<BucketId, double>> affine(truth.begin(), truth.end());
    std::stable_sort(affine.begin(), affine.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, affine.size()); ++i) {
        if (std::find(heaviest.begin(), heaviest.end(), affine[i].first) != heaviest.end()) ++hits;
    }
    result.top_k_overlap = k == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(k);
    return result;
}

SimulationReport run_simulation(const SimulationConfig& config, const AffinityModel& model,
                                NavigationBackend& backend, const std::function<LinkGraph()>& snapshot) {
    if (config.users == 0) throw Error(ErrorCode::InsufficientData, "no simulated users");
    if (!config.sessions && !config.hops_target) {
        throw Error(ErrorCode::InvalidParameters, "set a session count or a hop target");
    }
    config.reinforcement.validate();

    std::vector<UserProfile> users;
    std::vector<SimRng> rngs;
    for (std::size_t u = 0; u < config.users; ++u) {
        UserProfile p{config.adherence, config.mean_session_length, mix_seed(config.user_seed, u)};
        p.validate();
        users.push_back(p);
        rngs.emplace_back(p.seed);
    }

    SimulationReport report;
    report.portal = model.portal();
    report.ledger.initial_weight = snapshot().total_weight();

    Timestamp t = config.start_time;
    for (std::size_t s = 0;; ++s) {
        if (config.sessions && s >= *config.sessions) break;
        if (config.hops_target && report.hops >= *config.hops_target) break;
        const std::size_t u = s % config.users;
        std::optional<std::size_t> remaining;
        if (config.hops_target) remaining = *config.hops_target - report.hops;

        const std::string session_id = "u" + std::to_string(u + 1) + "-s" + std::to_string(s + 1);
        struct Booking : NavigationBackend {
            NavigationBackend& inner;
            WeightLedger& ledger;
            Booking(NavigationBackend& i, WeightLedger& l) : inner(i), ledger(l) {}
            std::vector<RankedLink> displayed_links(const BucketId& b) override { return inner.displayed_links(b); }
            void enter(const std::string& id, const BucketId& p, Timestamp at) override { inner.enter(id, p, at); }
            std::vector<Reinforcement> hop(const std::string& id, const BucketId& f, const BucketId& to,
                                           Timestamp at) override {
                auto applied = inner.hop(id, f, to, at);
                ledger.record(applied);
                return applied;
            }
        } booking(backend, report.ledger);

        const auto events = run_session(session_id, users[u], rngs[u], model, booking, t, remaining);
        report.sessions += 1;
        report.hops += events.size() - 1;
        t = events.back().at + 600;
    }

    report.estimate = estimate_traversals(report.ledger, config.reinforcement);
    const LinkGraph graph = snapshot();
    try {
        report.evaluation = evaluate(graph, model, config.hierarchy, config.top_k);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientData) throw;
        report.evaluation_error = e.what();
    }
    const double portal_wd = weighted_degree_centrality(graph, model.portal());
    report.portal_dominant = true;
    for (const auto& id : graph.nodes()) {
        if (weighted_degree_centrality(graph, id) > portal_wd) {
            report.portal_dominant = false;
            break;
        }
    }
    return report;
}

SimulationOutcome simulate_in_memory(const SimulationConfig& config, std::ostream* audit) {
    auto net = init_network(config.network);
    SimulationOutcome outcome;
    outcome.graph = std::move(net.graph);
    const auto ids = outcome.graph.nodes();
    AffinityModel model(ids, ids.front(), config.affinity);
    EngineBackend backend(outcome.graph, config.reinforcement, audit);
    outcome.report = run_simulation(config, model, backend, [&] { return outcome.graph; });
    return outcome;
}

nlohmann::json to_json(const SimulationReport& report) {
    nlohmann::json j;
    j["portal"] = report.portal.str();
    j["sessions"] = report.sessions;
    j["hops"] = report.hops;
    j["ledger"] = {{"initial_weight", report.ledger.initial_weight},
                   {"learned_weight", report.ledger.learned_weight},
                   {"hop_count", report.ledger.hop_count},
                   {"transitive_hops", report.ledger.transitive_hops},
                   {"weight_per_hop", report.ledger.hop_count == 0 ? 0.0
                                                       : report.ledger.learned_weight /
                                                             static_cast<double>(report.ledger.hop_count)}};
    j["estimated_traversals"] = report.estimate.estimate;
    j["portal_dominant"] = report.portal_dominant;
    if (report.evaluation) {
        const auto& e = *report.evaluation;
        j["pearson"] = e.pearson;
        j["spearman"] = e.spearman;
        j["top_k_overlap"] = e.top_k_overlap;
        j["hierarchy_members"] = e.hierarchy_members;
    } else {
        j["pearson"] = nullptr;
        j["spearman"] = nullptr;
        j["top_k_overlap"] = nullptr;
        j["evaluation_error"] = report.evaluation_error;
    }
    return j;
}

}  // namespace bucketnet
