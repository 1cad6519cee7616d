#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "bucketnet/link_graph.hpp"

namespace bucketnet {

struct HierarchyNode {
    BucketId bucket;
    std::optional<std::size_t> parent;
    std::size_t depth = 0;
    double raw_weight = 0.0;  // weight of the link parent -> bucket; 0 for the root
    double weight = 0.0;      // raw_weight, or raw_weight / max after normalization
    std::vector<std::size_t> children;
};

/// Bounded acyclic expansion of links from a root bucket.
///
/// Nodes are path instances: one bucket may occur in several branches, never
/// twice on a root-to-leaf path. Children are kept in weight-descending order.
class HierarchyTree {
public:
    HierarchyTree(BucketId root, std::size_t depth_limit, std::size_t branch_limit);

    static constexpr std::size_t kRoot = 0;

    /// Appends `bucket` under `parent` with the raw link weight. Throws
    /// InvalidParameters when depth/branch limits or path acyclicity would break.
    std::size_t add_child(std::size_t parent, const BucketId& bucket, double raw_weight);

    const HierarchyNode& node(std::size_t index) const { return nodes_.at(index); }
    const std::vector<HierarchyNode>& nodes() const { return nodes_; }
    const BucketId& root() const { return nodes_.front().bucket; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t edge_count() const { return nodes_.size() - 1; }
    std::size_t depth_limit() const { return depth_limit_; }
    std::size_t branch_limit() const { return branch_limit_; }
    bool normalized() const { return normalized_; }

    bool contains(const BucketId& bucket) const;
    bool on_path(std::size_t index, const BucketId& bucket) const;
    /// Buckets from the root down to `index`, inclusive.
    std::vector<BucketId> path_to(std::size_t index) const;
    /// Distinct buckets other than the root, ordered by id.
    std::vector<BucketId> members() const;

private:
    friend HierarchyTree normalize_weights(const HierarchyTree& tree);

    std::vector<HierarchyNode> nodes_;
    std::size_t depth_limit_;
    std::size_t branch_limit_;
    bool normalized_ = false;
};

struct HierarchyOptions {
    std::size_t depth_limit = 3;
    std::size_t branch_limit = 3;
    // Above the 0.5 initial random weight: unreinforced links stay out.
    double min_weight = 0.6;
};

/// Breadth-first expansion from `root`; each node takes its heaviest
/// `branch_limit` outgoing links with weight >= min_weight whose targets are
/// not already on the path to that node.
HierarchyTree extract_hierarchy(const LinkGraph& graph, const BucketId& root,
                                const HierarchyOptions& options = {});

/// Divides every edge weight by the largest one. Throws EmptyTree without edges.
HierarchyTree normalize_weights(const HierarchyTree& tree);

/// Sum over all root-to-target paths of the product of normalized edge
/// weights. The root relates to itself with weight 1.
double relationship_weight(const HierarchyTree& tree, const BucketId& target);

/// relationship_weight for every member of the tree.
std::map<BucketId, double> relationship_weights(const HierarchyTree& tree);

/// Pearson correlation over the shared keys. Throws InsufficientData for
/// fewer than 3 shared keys and ConstantSeries if either side is constant.
double correlate(const std::map<BucketId, double>& network,
                 const std::map<BucketId, double>& ground_truth);

/// Spearman rank correlation (average ranks for ties), same preconditions.
double rank_correlate(const std::map<BucketId, double>& network,
                      const std::map<BucketId, double>& ground_truth);

/// Nested nodes: {"bucket", "weight", "normalized", "depth", "children": [...]}.
nlohmann::json hierarchy_to_json(const HierarchyTree& tree);

/// `bucket,relationship_weight,ground_truth` for the shared keys.
void write_relationship_csv(std::ostream& out, const std::map<BucketId, double>& network,
                            const std::map<BucketId, double>& ground_truth);

}  // namespace bucketnet
