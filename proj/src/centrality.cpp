#include "bucketnet/centrality.hpp"

#include <algorithm>
#include <map>

#include "bucketnet/error.hpp"
#include "bucketnet/hebbian.hpp"

namespace bucketnet {

CentralityMetric parse_centrality_metric(std::string_view text) {
    if (text == "degree") return CentralityMetric::Degree;
    if (text == "weighted") return CentralityMetric::Weighted;
    throw Error(ErrorCode::InvalidParameters, "metric must be degree|weighted, got '" +
                                                  std::string(text) + "'");
}

std::size_t degree_centrality(const LinkGraph& graph, const BucketId& bucket) {
    return graph.out_links(bucket).size() + graph.in_links(bucket).size();
}

double weighted_degree_centrality(const LinkGraph& graph, const BucketId& bucket) {
    double sum = 0.0;
    for (const auto& [target, w] : graph.out_links(bucket)) sum += w;
    for (const auto& source : graph.in_links(bucket)) sum += *graph.weight(source, bucket);
    return sum;
}

CentralityScore centrality_score(const LinkGraph& graph, const BucketId& bucket) {
    return {bucket, degree_centrality(graph, bucket), weighted_degree_centrality(graph, bucket)};
}

std::vector<CentralityScore> rank_all(const LinkGraph& graph, CentralityMetric metric) {
    std::vector<CentralityScore> scores;
    scores.reserve(graph.node_count());
    for (const auto& id : graph.nodes()) scores.push_back(centrality_score(graph, id));
    // nodes() is id-ordered; stable sort keeps the id tie-break.
    if (metric == CentralityMetric::Degree) {
        std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
            return a.degree > b.degree;
        });
    } else {
        std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
            return a.weighted_degree > b.weighted_degree;
        });
    }
    return scores;
}

std::vector<CentralityScore> top_k(const LinkGraph& graph, std::size_t k, CentralityMetric metric) {
    if (k == 0) throw Error(ErrorCode::InvalidParameters, "k must be >= 1");
    auto scores = rank_all(graph, metric);
    if (scores.size() > k) scores.resize(k);
    return scores;
}

void write_centrality_csv(std::ostream& out, const LinkGraph& graph, CentralityMetric order,
                          std::size_t limit) {
    const auto by_degree = rank_all(graph, CentralityMetric::Degree);
    const auto by_weight = rank_all(graph, CentralityMetric::Weighted);
    std::map<BucketId, std::size_t> degree_rank;
    std::map<BucketId, std::size_t> weight_rank;
    for (std::size_t i = 0; i < by_degree.size(); ++i) degree_rank[by_degree[i].bucket] = i + 1;
    for (std::size_t i = 0; i < by_weight.size(); ++i) weight_rank[by_weight[i].bucket] = i + 1;

    const auto& rows = order == CentralityMetric::Degree ? by_degree : by_weight;
    const std::size_t n = limit == 0 ? rows.size() : std::min(limit, rows.size());
    out << "bucket,degree,weighted_degree,rank_degree,rank_weighted\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = rows[i];
        out << s.bucket.str() << ',' << s.degree << ',' << format_weight(s.weighted_degree) << ','
            << degree_rank[s.bucket] << ',' << weight_rank[s.bucket] << '\n';
    }
}

}  // namespace bucketnet
