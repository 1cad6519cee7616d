#include <gtest/gtest.h>

#include <sstream>

#include "bucketnet/centrality.hpp"
#include "bucketnet/error.hpp"
#include "bucketnet/simulator.hpp"
#include "test_support.hpp"

using namespace bucketnet;
using bucketnet::testing::id;

namespace {

// Naive full edge scan.
std::pair<std::size_t, double> oracle(const LinkGraph& g, const BucketId& b) {
    std::size_t degree = 0;
    double weight = 0.0;
    for (const auto& l : g.links()) {
        if (l.source == b) {
            ++degree;
            weight += l.weight;
        }
        if (l.target == b) {
            ++degree;
            weight += l.weight;
        }
    }
    return {degree, weight};
}

}  // namespace

TEST(CentralityTest, IsolatedNodeAndUnknownBucket) {
    LinkGraph g;
    g.add_node(id("a"));
    EXPECT_EQ(degree_centrality(g, id("a")), 0u);
    EXPECT_EQ(weighted_degree_centrality(g, id("a")), 0.0);
    EXPECT_THROW(degree_centrality(g, id("zz")), Error);
    EXPECT_THROW(weighted_degree_centrality(g, id("zz")), Error);
}

TEST(CentralityTest, StarCountsInAndOut) {
    LinkGraph g;
    for (const char* n : {"c", "x1", "x2", "x3", "y1", "y2"}) g.add_node(id(n));
    for (const char* n : {"x1", "x2", "x3"}) g.add_link(id("c"), id(n), 1.0);
    for (const char* n : {"y1", "y2"}) g.add_link(id(n), id("c"), 1.0);
    EXPECT_EQ(degree_centrality(g, id("c")), 5u);
}

TEST(CentralityTest, MutualPairCountsTwiceAndWeightsSum) {
    LinkGraph g;
    for (const char* n : {"a", "b", "c"}) g.add_node(id(n));
    g.add_link(id("a"), id("b"), 1.0);
    g.add_link(id("b"), id("a"), 0.5);
    g.add_link(id("b"), id("c"), 0.3);
    EXPECT_EQ(degree_centrality(g, id("b")), 3u);
    EXPECT_EQ(degree_centrality(g, id("a")), 2u);
    EXPECT_NEAR(weighted_degree_centrality(g, id("b")), 1.8, 1e-12);
}

TEST(CentralityTest, TopKTieBreakAndBounds) {
    LinkGraph g;
    for (const char* n : {"b", "a", "c"}) g.add_node(id(n));
    g.add_link(id("a"), id("c"), 1.0);
    g.add_link(id("b"), id("c"), 1.0);
    const auto one = top_k(g, 1, CentralityMetric::Degree);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].bucket, id("c"));
    const auto two = top_k(g, 2, CentralityMetric::Weighted);
    EXPECT_EQ(two[1].bucket, id("a"));  // a and b tie at 1.0
    EXPECT_EQ(top_k(g, 10, CentralityMetric::Degree).size(), 3u);
    EXPECT_THROW(top_k(g, 0, CentralityMetric::Degree), Error);
}

TEST(CentralityTest, ParseMetric) {
    EXPECT_EQ(parse_centrality_metric("degree"), CentralityMetric::Degree);
    EXPECT_EQ(parse_centrality_metric("weighted"), CentralityMetric::Weighted);
    EXPECT_THROW(parse_centrality_metric("eigen"), Error);
}

TEST(CentralityTest, CsvHasRanksForBothMetrics) {
    LinkGraph g;
    for (const char* n : {"a", "b", "c"}) g.add_node(id(n));
    g.add_link(id("a"), id("b"), 5.0);
    g.add_link(id("c"), id("b"), 0.5);
    g.add_link(id("c"), id("a"), 0.5);
    std::ostringstream out;
    write_centrality_csv(out, g);
    EXPECT_EQ(out.str(),
              "bucket,degree,weighted_degree,rank_degree,rank_weighted\n"
              "a,2,5.5,1,1\n"
              "b,2,5.5,2,2\n"
              "c,2,1,3,3\n");
    std::ostringstream limited;
    write_centrality_csv(limited, g, CentralityMetric::Weighted, 1);
    EXPECT_EQ(limited.str(), "bucket,degree,weighted_degree,rank_degree,rank_weighted\na,2,5.5,1,1\n");
}

TEST(CentralityPropertyTest, OracleAndHandshake) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const LinkGraph g = bucketnet::testing::random_graph(rng, 20, 80);
        std::size_t degree_sum = 0;
        double weight_sum = 0.0;
        for (const auto& b : g.nodes()) {
            const auto [d, w] = oracle(g, b);
            ASSERT_EQ(degree_centrality(g, b), d);
            ASSERT_EQ(weighted_degree_centrality(g, b), w);
            degree_sum += d;
            weight_sum += w;
        }
        ASSERT_EQ(degree_sum, 2 * g.link_count());
        ASSERT_NEAR(weight_sum, 2 * g.total_weight(), 1e-9);
    }
}

TEST(CentralityPropertyTest, ReinforcementMovesOnlyEndpoints) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        LinkGraph g = bucketnet::testing::random_graph(rng, 10, 30);
        const auto nodes = g.nodes();
        std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
        const auto& s = nodes[pick(rng)];
        const auto& t = nodes[pick(rng)];
        if (s == t) continue;
        const bool created = !g.has_link(s, t);
        std::map<BucketId, CentralityScore> before;
        for (const auto& b : nodes) before[b] = centrality_score(g, b);
        g.reinforce(s, t, 0.75);
        for (const auto& b : nodes) {
            const auto after = centrality_score(g, b);
            const bool endpoint = b == s || b == t;
            ASSERT_NEAR(after.weighted_degree, before[b].weighted_degree + (endpoint ? 0.75 : 0.0), 1e-9);
            ASSERT_EQ(after.degree, before[b].degree + (endpoint && created ? 1 : 0));
        }
    }
}

TEST(CentralityTest, FreshNetworkRankingsAreIdentical) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        NetworkParams p;
        p.seed = seed;
        const auto net = init_network(p);
        const auto by_degree = rank_all(net.graph, CentralityMetric::Degree);
        const auto by_weight = rank_all(net.graph, CentralityMetric::Weighted);
        ASSERT_EQ(by_degree.size(), by_weight.size());
        for (std::size_t i = 0; i < by_degree.size(); ++i) ASSERT_EQ(by_degree[i].bucket, by_weight[i].bucket);
        for (const auto& b : net.graph.nodes()) {
            ASSERT_EQ(degree_centrality(net.graph, b), 3 + net.graph.in_links(b).size());
        }
    }
}
