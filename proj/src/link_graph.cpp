#include "bucketnet/link_graph.hpp"

#include <algorithm>
#include <cmath>

#include "bucketnet/error.hpp"

namespace bucketnet {

bool LinkGraph::add_node(const BucketId& id) {
    if (id.empty()) throw Error(ErrorCode::InvalidBucketId, "empty id");
    return nodes_.try_emplace(id).second;
}

const LinkGraph::Node& LinkGraph::node_or_throw(const BucketId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownBucket, id.str());
    return it->second;
}

LinkGraph::Node& LinkGraph::node_or_throw(const BucketId& id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownBucket, id.str());
    return it->second;
}

void LinkGraph::add_link(const BucketId& source, const BucketId& target, double weight) {
    if (source == target) throw Error(ErrorCode::SelfLink, source.str());
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
        throw Error(ErrorCode::InvalidParameters, "link weight must be finite and >= 0");
    }
    Node& src = node_or_throw(source);
    Node& dst = node_or_throw(target);
    if (!src.out.try_emplace(target, weight).second) {
        throw Error(ErrorCode::DuplicateLink, source.str() + " -> " + target.str());
    }
    dst.in.insert(source);
    ++link_count_;
    compensated_add(total_weight_, total_carry_, weight);
}

double LinkGraph::reinforce(const BucketId& source, const BucketId& target, double delta) {
    if (source == target) throw Error(ErrorCode::SelfLink, source.str());
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw Error(ErrorCode::NonPositiveDelta, std::to_string(delta));
    }
    Node& src = node_or_throw(source);
    Node& dst = node_or_throw(target);
    auto [it, created] = src.out.try_emplace(target, 0.0);
    if (created) {
        dst.in.insert(source);
        ++link_count_;
    }
    it->second += delta;
    compensated_add(total_weight_, total_carry_, delta);
    return it->second;
}

std::optional<double> LinkGraph::weight(const BucketId& source, const BucketId& target) const {
    auto it = nodes_.find(source);
    if (it == nodes_.end()) return std::nullopt;
    auto link = it->second.out.find(target);
    if (link == it->second.out.end()) return std::nullopt;
    return link->second;
}

std::vector<RankedLink> LinkGraph::ranked_links(const BucketId& source) const {
    const Node& src = node_or_throw(source);
    std::vector<RankedLink> ranked;
    ranked.reserve(src.out.size());
    for (const auto& [target, w] : src.out) ranked.push_back({target, w});
    // src.out is already ordered by target id, so a stable sort on weight
    // yields the lexicographic tie-break.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedLink& a, const RankedLink& b) { return a.weight > b.weight; });
    return ranked;
}

const std::map<BucketId, double>& LinkGraph::out_links(const BucketId& source) const {
    return node_or_throw(source).out;
}

const std::set<BucketId>& LinkGraph::in_links(const BucketId& target) const {
    return node_or_throw(target).in;
}

std::vector<BucketId> LinkGraph::nodes() const {
    std::vector<BucketId> ids;
    ids.reserve(nodes_.size());
    for (const auto& [id, node] : nodes_) ids.push_back(id);
    return ids;
}

std::vector<Link> LinkGraph::links() const {
    std::vector<Link> all;
    all.reserve(link_count_);
    for (const auto& [source, node] : nodes_) {
        for (const auto& [target, w] : node.out) all.push_back({source, target, w});
    }
    return all;
}

double LinkGraph::recompute_total_weight() const {
    double sum = 0.0;
    for (const auto& [source, node] : nodes_) {
        for (const auto& [target, w] : node.out) sum += w;
    }
    return sum;
}

}  // namespace bucketnet
