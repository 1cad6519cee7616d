#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "bucketnet/bucket_id.hpp"

namespace bucketnet {

/// Adds `value` to the running total (sum, carry) with a Neumaier step, then
/// folds the carry back so `sum` stays the best rounded total and `carry`
/// holds what rounding dropped.
inline void compensated_add(double& sum, double& carry, double value) {
    const double t = sum + value;
    if (std::abs(sum) >= std::abs(value)) {
        carry += (sum - t) + value;
    } else {
        carry += (value - t) + sum;
    }
    sum = t + carry;
    carry -= sum - t;
}

struct Link {
    BucketId source;
    BucketId target;
    double weight = 0.0;

    friend bool operator==(const Link&, const Link&) = default;
};

struct RankedLink {
    BucketId target;
    double weight = 0.0;

    friend bool operator==(const RankedLink&, const RankedLink&) = default;
};

/// Weighted directed graph over bucket ids.
///
/// Weights never decrease: the only mutators are add_node, add_link (used when
/// restoring persisted state) and reinforce. The sum of all weights is cached
/// and updated on every mutation.
///
/// Not internally synchronized; mutations must be funneled through one owner.
class LinkGraph {
public:
    /// Returns true if the node was newly inserted.
    bool add_node(const BucketId& id);

    bool contains(const BucketId& id) const { return nodes_.count(id) != 0; }

    /// Inserts an edge with an explicit weight (>= 0), e.g. a persisted or
    /// initial random link. Throws DuplicateLink if the edge already exists.
    void add_link(const BucketId& source, const BucketId& target, double weight);

    /// Adds delta to source->target, creating the edge at delta if absent.
    /// Returns the resulting weight.
    double reinforce(const BucketId& source, const BucketId& target, double delta);

    std::optional<double> weight(const BucketId& source, const BucketId& target) const;
    bool has_link(const BucketId& source, const BucketId& target) const {
        return weight(source, target).has_value();
    }

    /// Outgoing links by weight descending, ties by target id ascending.
    std::vector<RankedLink> ranked_links(const BucketId& source) const;

    const std::map<BucketId, double>& out_links(const BucketId& source) const;
    const std::set<BucketId>& in_links(const BucketId& target) const;

    std::vector<BucketId> nodes() const;
    /// All edges ordered by (source, target).
    std::vector<Link> links() const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t link_count() const { return link_count_; }

    double total_weight() const { return total_weight_; }
    /// Sum of weights recomputed from the edge set; used to audit the cache.
    double recompute_total_weight() const;

    friend bool operator==(const LinkGraph& a, const LinkGraph& b) { return a.nodes_ == b.nodes_; }

private:
    struct Node {
        std::map<BucketId, double> out;
        std::set<BucketId> in;

        friend bool operator==(const Node&, const Node&) = default;
    };

    const Node& node_or_throw(const BucketId& id) const;
    Node& node_or_throw(const BucketId& id);

    std::map<BucketId, Node> nodes_;
    std::size_t link_count_ = 0;
    double total_weight_ = 0.0;
    double total_carry_ = 0.0;
};

}  // namespace bucketnet
