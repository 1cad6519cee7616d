#pragma once

#include <cstddef>
#include <ostream>
#include <string_view>
#include <vector>

#include "bucketnet/link_graph.hpp"

namespace bucketnet {

enum class CentralityMetric { Degree, Weighted };

/// Parses "degree" | "weighted"; throws InvalidParameters otherwise.
CentralityMetric parse_centrality_metric(std::string_view text);

struct CentralityScore {
    BucketId bucket;
    std::size_t degree = 0;       // in-links + out-links; a mutual pair counts twice
    double weighted_degree = 0.0;  // sum of weights of those links

    friend bool operator==(const CentralityScore&, const CentralityScore&) = default;
};

std::size_t degree_centrality(const LinkGraph& graph, const BucketId& bucket);
double weighted_degree_centrality(const LinkGraph& graph, const BucketId& bucket);

CentralityScore centrality_score(const LinkGraph& graph, const BucketId& bucket);

/// Every node, sorted by `metric` descending with ties broken by id.
std::vector<CentralityScore> rank_all(const LinkGraph& graph, CentralityMetric metric);

/// First k entries of rank_all (all nodes if the graph is smaller).
std::vector<CentralityScore> top_k(const LinkGraph& graph, std::size_t k, CentralityMetric metric);

/// CSV with header `bucket,degree,weighted_degree,rank_degree,rank_weighted`,
/// rows in degree-rank order. When `limit` is set, only the first rows under
/// `order` are written.
void write_centrality_csv(std::ostream& out, const LinkGraph& graph,
                          CentralityMetric order = CentralityMetric::Degree,
                          std::size_t limit = 0);

}  // namespace bucketnet
