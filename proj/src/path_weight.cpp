#include "bucketnet/path_weight.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include "bucketnet/error.hpp"
#include "bucketnet/hebbian.hpp"

namespace bucketnet {

HierarchyTree::HierarchyTree(BucketId root, std::size_t depth_limit, std::size_t branch_limit)
    : depth_limit_(depth_limit), branch_limit_(branch_limit) {
    if (depth_limit == 0 || branch_limit == 0) {
        throw Error(ErrorCode::InvalidParameters, "depth and branch limits must be >= 1");
    }
    nodes_.push_back(HierarchyNode{std::move(root), std::nullopt, 0, 0.0, 0.0, {}});
}

bool HierarchyTree::on_path(std::size_t index, const BucketId& bucket) const {
    std::optional<std::size_t> cursor = index;
    while (cursor) {
        const auto& n = nodes_.at(*cursor);
        if (n.bucket == bucket) return true;
        cursor = n.parent;
    }
    return false;
}

std::size_t HierarchyTree::add_child(std::size_t parent, const BucketId& bucket, double raw_weight) {
    if (parent >= nodes_.size()) throw Error(ErrorCode::InvalidParameters, "no such parent");
    if (!(raw_weight > 0.0)) throw Error(ErrorCode::InvalidParameters, "edge weight must be > 0");
    const auto& p = nodes_[parent];
    if (p.depth + 1 > depth_limit_) throw Error(ErrorCode::InvalidParameters, "depth limit");
    if (p.children.size() >= branch_limit_) throw Error(ErrorCode::InvalidParameters, "branch limit");
    if (on_path(parent, bucket)) {
        throw Error(ErrorCode::InvalidParameters, bucket.str() + " already on path");
    }

    const std::size_t index = nodes_.size();
    const std::size_t depth = p.depth + 1;
    nodes_.push_back(HierarchyNode{bucket, parent, depth, raw_weight, raw_weight, {}});

    auto& siblings = nodes_[parent].children;
    auto pos = std::upper_bound(siblings.begin(), siblings.end(), raw_weight,
                                [&](double w, std::size_t other) { return w > nodes_[other].raw_weight; });
    siblings.insert(pos, index);
    return index;
}

bool HierarchyTree::contains(const BucketId& bucket) const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [&](const HierarchyNode& n) { return n.bucket == bucket; });
}

std::vector<BucketId> HierarchyTree::path_to(std::size_t index) const {
    std::vector<BucketId> path;
    std::optional<std::size_t> cursor = index;
    while (cursor) {
        path.push_back(nodes_.at(*cursor).bucket);
        cursor = nodes_[*cursor].parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<BucketId> HierarchyTree::members() const {
    std::set<BucketId> unique;
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (nodes_[i].bucket != root()) unique.insert(nodes_[i].bucket);
    }
    return {unique.begin(), unique.end()};
}

HierarchyTree extract_hierarchy(const LinkGraph& graph, const BucketId& root,
                                const HierarchyOptions& options) {
    if (!graph.contains(root)) throw Error(ErrorCode::UnknownBucket, root.str());
    HierarchyTree tree(root, options.depth_limit, options.branch_limit);

    std::deque<std::size_t> frontier{HierarchyTree::kRoot};
    while (!frontier.empty()) {
        const std::size_t current = frontier.front();
        frontier.pop_front();
        if (tree.node(current).depth >= options.depth_limit) continue;

        const BucketId bucket = tree.node(current).bucket;
        std::size_t taken = 0;
        for (const auto& link : graph.ranked_links(bucket)) {
            if (taken == options.branch_limit) break;
            // ranked_links is weight-descending, nothing lighter can qualify
            if (link.weight < options.min_weight) break;
            if (tree.on_path(current, link.target)) continue;
            frontier.push_back(tree.add_child(current, link.target, link.weight));
            ++taken;
        }
    }
    return tree;
}

HierarchyTree normalize_weights(const HierarchyTree& tree) {
    if (tree.edge_count() == 0) throw Error(ErrorCode::EmptyTree, tree.root().str());
    double max_weight = 0.0;
    for (std::size_t i = 1; i < tree.size(); ++i) {
        max_weight = std::max(max_weight, tree.node(i).raw_weight);
    }
    HierarchyTree result = tree;
    for (std::size_t i = 1; i < result.nodes_.size(); ++i) {
        auto& n = result.nodes_[i];
        n.weight = n.raw_weight == max_weight ? 1.0 : n.raw_weight / max_weight;
    }
    result.normalized_ = true;
    return result;
}

double relationship_weight(const HierarchyTree& tree, const BucketId& target) {
    if (!tree.normalized()) {
        throw Error(ErrorCode::InvalidParameters, "relationship weights need a normalized tree");
    }
    if (target == tree.root()) return 1.0;

    bool found = false;
    double total = 0.0;
    for (std::size_t i = 1; i < tree.size(); ++i) {
        if (tree.node(i).bucket != target) continue;
        found = true;
        double product = 1.0;
        std::optional<std::size_t> cursor = i;
        while (cursor && *cursor != HierarchyTree::kRoot) {
            product *= tree.node(*cursor).weight;
            cursor = tree.node(*cursor).parent;
        }
        total += product;
    }
    if (!found) throw Error(ErrorCode::TargetNotInTree, target.str());
    return total;
}

std::map<BucketId, double> relationship_weights(const HierarchyTree& tree) {
    std::map<BucketId, double> weights;
    for (const auto& bucket : tree.members()) weights[bucket] = relationship_weight(tree, bucket);
    return weights;
}

namespace {

struct PairedSeries {
    std::vector<double> x;
    std::vector<double> y;
};

PairedSeries intersect(const std::map<BucketId, double>& a, const std::map<BucketId, double>& b) {
    PairedSeries s;
    for (const auto& [key, value] : a) {
        auto it = b.find(key);
        if (it == b.end()) continue;
        s.x.push_back(value);
        s.y.push_back(it->second);
    }
    if (s.x.size() < 3) {
        throw Error(ErrorCode::InsufficientData,
                    std::to_string(s.x.size()) + " shared keys, need at least 3");
    }
    return s;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ConstantSeries, "zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double correlate(const std::map<BucketId, double>& network,
                 const std::map<BucketId, double>& ground_truth) {
    const auto s = intersect(network, ground_truth);
    return pearson(s.x, s.y);
}

double rank_correlate(const std::map<BucketId, double>& network,
                      const std::map<BucketId, double>& ground_truth) {
    const auto s = intersect(network, ground_truth);
    return pearson(average_ranks(s.x), average_ranks(s.y));
}

namespace {

nlohmann::json node_to_json(const HierarchyTree& tree, std::size_t index) {
    const auto& n = tree.node(index);
    nlohmann::json j;
    j["bucket"] = n.bucket.str();
    j["depth"] = n.depth;
    if (n.parent) {
        j["weight"] = n.raw_weight;
        j["normalized"] = tree.normalized() ? n.weight : n.raw_weight;
    }
    j["children"] = nlohmann::json::array();
    for (std::size_t child : n.children) j["children"].push_back(node_to_json(tree, child));
    return j;
}

}  // namespace

nlohmann::json hierarchy_to_json(const HierarchyTree& tree) {
    const HierarchyTree* view = &tree;
    std::optional<HierarchyTree> normalized;
    if (!tree.normalized() && tree.edge_count() > 0) {
        normalized = normalize_weights(tree);
        view = &*normalized;
    }
    nlohmann::json j;
    j["root"] = tree.root().str();
    j["depth_limit"] = tree.depth_limit();
    j["branch_limit"] = tree.branch_limit();
    j["tree"] = node_to_json(*view, HierarchyTree::kRoot);
    return j;
}

void write_relationship_csv(std::ostream& out, const std::map<BucketId, double>& network,
                            const std::map<BucketId, double>& ground_truth) {
    out << "bucket,relationship_weight,ground_truth\n";
    for (const auto& [bucket, w] : network) {
        auto it = ground_truth.find(bucket);
        if (it == ground_truth.end()) continue;
        out << bucket.str() << ',' << format_weight(w) << ',' << format_weight(it->second) << '\n';
    }
}

}  // namespace bucketnet
