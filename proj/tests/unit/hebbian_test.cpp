#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "bucketnet/error.hpp"
#include "bucketnet/hebbian.hpp"
#include "test_support.hpp"

using namespace bucketnet;
using bucketnet::testing::id;

namespace {

LinkGraph empty_graph(std::size_t n) {
    LinkGraph g;
    for (std::size_t i = 1; i <= n; ++i) g.add_node(id("b" + std::to_string(i)));
    return g;
}

TraversalEvent hop(const std::string& session, std::optional<std::string> from, const std::string& to,
                   Timestamp at = 0) {
    TraversalEvent e;
    e.session_id = session;
    if (from) e.from = id(*from);
    e.to = id(to);
    e.at = at;
    return e;
}

// Independent oracle: replays walks with the three rules written directly
// against a (source, target) -> weight map.
using WeightMap = std::map<std::pair<std::string, std::string>, double>;

void oracle_walk(WeightMap& w, const std::vector<std::string>& walk) {
    for (std::size_t i = 1; i < walk.size(); ++i) {
        w[{walk[i - 1], walk[i]}] += 1.0;
        w[{walk[i], walk[i - 1]}] += 0.5;
        if (i >= 2 && walk[i - 2] != walk[i]) w[{walk[i - 2], walk[i]}] += 0.3;
    }
}

WeightMap as_map(const LinkGraph& g) {
    WeightMap w;
    for (const auto& l : g.links()) w[{l.source.str(), l.target.str()}] = l.weight;
    return w;
}

void expect_same(const WeightMap& a, const WeightMap& b) {
    ASSERT_EQ(a.size(), b.size());
    for (const auto& [edge, weight] : a) {
        auto it = b.find(edge);
        ASSERT_NE(it, b.end()) << edge.first << "->" << edge.second;
        EXPECT_NEAR(weight, it->second, 1e-9) << edge.first << "->" << edge.second;
    }
}

}  // namespace

TEST(ReinforcementConfigTest, DefaultsAndValidation) {
    ReinforcementConfig c;
    EXPECT_EQ(c.frequency, 1.0);
    EXPECT_EQ(c.symmetry, 0.5);
    EXPECT_EQ(c.transitivity, 0.3);
    EXPECT_NO_THROW(c.validate());
    c.symmetry = 0.0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.transitivity = -0.1;
    EXPECT_THROW(c.validate(), Error);
}

TEST(ApplyEventTest, WorkedExampleDeltas) {
    LinkGraph g = empty_graph(3);
    SessionState s{"s", {}, {}, 0};
    const ReinforcementConfig c;
    EXPECT_TRUE(apply_event(hop("s", {}, "b1"), s, g, c).empty());
    EXPECT_EQ(s.previous, id("b1"));
    EXPECT_FALSE(s.pre_previous);

    const auto first = apply_event(hop("s", "b1", "b2"), s, g, c);
    EXPECT_EQ(first, (std::vector<Reinforcement>{{id("b1"), id("b2"), 1.0, Rule::Frequency},
                                                 {id("b2"), id("b1"), 0.5, Rule::Symmetry}}));
    const auto second = apply_event(hop("s", "b2", "b3"), s, g, c);
    EXPECT_EQ(second, (std::vector<Reinforcement>{{id("b2"), id("b3"), 1.0, Rule::Frequency},
                                                  {id("b3"), id("b2"), 0.5, Rule::Symmetry},
                                                  {id("b1"), id("b3"), 0.3, Rule::Transitivity}}));
    EXPECT_EQ(g.link_count(), 5u);
    EXPECT_FALSE(g.has_link(id("b3"), id("b1")));
    EXPECT_EQ(s.previous, id("b3"));
    EXPECT_EQ(s.pre_previous, id("b2"));
}

TEST(ApplyEventTest, BackAndForthAppliesNoTransitivity) {
    LinkGraph g = empty_graph(2);
    SessionState s{"s", {}, {}, 0};
    apply_event(hop("s", {}, "b1"), s, g, {});
    apply_event(hop("s", "b1", "b2"), s, g, {});
    const auto back = apply_event(hop("s", "b2", "b1"), s, g, {});
    ASSERT_EQ(back.size(), 2u);
    EXPECT_DOUBLE_EQ(*g.weight(id("b2"), id("b1")), 1.5);
    EXPECT_DOUBLE_EQ(*g.weight(id("b1"), id("b2")), 1.5);
    EXPECT_EQ(g.link_count(), 2u);
}

TEST(ApplyEventTest, ExistingEdgesAccumulate) {
    LinkGraph g = empty_graph(2);
    g.add_link(id("b1"), id("b2"), 0.5);
    SessionState s{"s", {}, {}, 0};
    apply_event(hop("s", "b1", "b2"), s, g, {});
    EXPECT_DOUBLE_EQ(*g.weight(id("b1"), id("b2")), 1.5);
    EXPECT_DOUBLE_EQ(*g.weight(id("b2"), id("b1")), 0.5);
}

TEST(ApplyEventTest, ErrorsLeaveGraphAndSessionUntouched) {
    LinkGraph g = empty_graph(3);
    SessionState s{"s", id("b1"), {}, 5};
    const LinkGraph before = g;
    auto code = [&](const TraversalEvent& e) {
        try {
            apply_event(e, s, g, {});
        } catch (const Error& err) {
            return err.code();
        }
        return ErrorCode::InvalidParameters;
    };
    EXPECT_EQ(code(hop("other", "b1", "b2")), ErrorCode::SessionMismatch);
    EXPECT_EQ(code(hop("s", "b1", "b1")), ErrorCode::SelfHop);
    EXPECT_EQ(code(hop("s", "b1", "zz")), ErrorCode::UnknownBucket);
    EXPECT_EQ(code(hop("s", "zz", "b1")), ErrorCode::UnknownBucket);
    EXPECT_EQ(code(hop("s", {}, "zz")), ErrorCode::UnknownBucket);
    EXPECT_TRUE(g == before);
    EXPECT_EQ(s.previous, id("b1"));
    EXPECT_EQ(s.last_activity, 5);
}

TEST(ApplyEventTest, NonContiguousHopGetsNoTransitivity) {
    LinkGraph g = empty_graph(4);
    SessionState s{"s", {}, {}, 0};
    apply_event(hop("s", "b1", "b2"), s, g, {});
    // The user jumps back to b3 without passing b2 -> b3.
    const auto r = apply_event(hop("s", "b3", "b4"), s, g, {});
    EXPECT_EQ(r.size(), 2u);
    EXPECT_FALSE(g.has_link(id("b1"), id("b4")));
}

TEST(ApplyEventTest, CustomConstantsAreUsed) {
    LinkGraph g = empty_graph(3);
    SessionState s{"s", {}, {}, 0};
    const ReinforcementConfig c{2.0, 0.25, 0.125};
    apply_event(hop("s", "b1", "b2"), s, g, c);
    apply_event(hop("s", "b2", "b3"), s, g, c);
    EXPECT_EQ(*g.weight(id("b1"), id("b2")), 2.0);
    EXPECT_EQ(*g.weight(id("b2"), id("b1")), 0.25);
    EXPECT_EQ(*g.weight(id("b1"), id("b3")), 0.125);
}

// Random walks: engine matches the oracle, the ledger identity and bound
// hold, no self-edges appear, and every hop applies 2 or 3 deltas.
TEST(HebbianPropertyTest, RandomWalksMatchOracleAndLedger) {
    std::mt19937_64 rng(7);
    const ReinforcementConfig c;
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> size(2, 8);
        const int n = size(rng);
        LinkGraph g = empty_graph(n);
        std::uniform_int_distribution<int> pick(1, n);
        std::uniform_int_distribution<int> length(1, 12);
        std::uniform_int_distribution<int> sessions(1, 4);
        WeightMap oracle;
        WeightLedger ledger;
        const int session_count = sessions(rng);
        for (int si = 0; si < session_count; ++si) {
            const std::string sid = "s" + std::to_string(si);
            SessionState s{sid, {}, {}, 0};
            std::vector<std::string> walk{"b" + std::to_string(pick(rng))};
            apply_event(hop(sid, {}, walk.back()), s, g, c);
            const int len = length(rng);
            for (int i = 0; i < len; ++i) {
                std::string next;
                do next = "b" + std::to_string(pick(rng));
                while (next == walk.back());
                const auto applied = apply_event(hop(sid, walk.back(), next), s, g, c);
                const bool expect_transitive = walk.size() >= 2 && walk[walk.size() - 2] != next;
                ASSERT_EQ(applied.size(), expect_transitive ? 3u : 2u);
                ledger.record(applied);
                walk.push_back(next);
            }
            oracle_walk(oracle, walk);
        }
        expect_same(oracle, as_map(g));
        for (const auto& l : g.links()) ASSERT_NE(l.source, l.target);
        ASSERT_NEAR(ledger.identity_residual(c), 0.0, 1e-9);
        ASSERT_NEAR(ledger.learned_weight, g.total_weight(), 1e-9);
        ASSERT_GE(ledger.learned_weight, 1.5 * ledger.hop_count - 1e-9);
        ASSERT_LE(ledger.learned_weight, 1.8 * ledger.hop_count + 1e-9);
    }
}

// Interleaving independent sessions gives the same graph as running them
// one after the other; replay is deterministic.
TEST(HebbianPropertyTest, InterleavingSessionsCommutes) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 6;
        std::uniform_int_distribution<int> pick(1, n);
        std::vector<std::vector<std::string>> walks(3);
        for (auto& w : walks) {
            w.push_back("b" + std::to_string(pick(rng)));
            for (int i = 0; i < 6; ++i) {
                std::string next;
                do next = "b" + std::to_string(pick(rng));
                while (next == w.back());
                w.push_back(next);
            }
        }
        auto run = [&](bool interleave) {
            LinkGraph g = empty_graph(n);
            std::vector<SessionState> states;
            for (std::size_t k = 0; k < walks.size(); ++k) {
                states.push_back({"s" + std::to_string(k), {}, {}, 0});
                apply_event(hop(states[k].id, {}, walks[k][0]), states[k], g, {});
            }
            std::vector<std::vector<Reinforcement>> trace;
            auto step = [&](std::size_t k, std::size_t i) {
                trace.push_back(apply_event(hop(states[k].id, walks[k][i - 1], walks[k][i]), states[k], g, {}));
            };
            if (interleave) {
                for (std::size_t i = 1; i < walks[0].size(); ++i)
                    for (std::size_t k = 0; k < walks.size(); ++k) step(k, i);
            } else {
                for (std::size_t k = 0; k < walks.size(); ++k)
                    for (std::size_t i = 1; i < walks[k].size(); ++i) step(k, i);
            }
            return std::make_pair(as_map(g), trace);
        };
        const auto a = run(true);
        const auto b = run(false);
        expect_same(a.first, b.first);
        const auto again = run(true);
        ASSERT_EQ(a.second, again.second);
    }
}

TEST(SessionRegistryTest, TtlExpiry) {
    SessionRegistry reg(100);
    SessionState& s = reg.session_for("u", 0);
    EXPECT_FALSE(s.previous);
    s.previous = id("b1");
    EXPECT_EQ(reg.session_for("u", 50).previous, id("b1"));
    EXPECT_EQ(reg.session_for("u", 150).previous, id("b1"));  // refreshed at 50
    EXPECT_FALSE(reg.session_for("u", 150 + 200).previous);   // idle 2 x ttl
    reg.session_for("v", 400);
    EXPECT_EQ(reg.size(), 2u);
    EXPECT_EQ(reg.expire(460), 1u);
    ASSERT_NE(reg.find("v"), nullptr);
    EXPECT_EQ(reg.find("u"), nullptr);
}

TEST(LedgerTest, EstimateTraversals) {
    const ReinforcementConfig c;
    WeightLedger ledger;
    ledger.learned_weight = 1719;
    // 1719 / 1041 = 1.6513 per traversal.
    EXPECT_NEAR(1719.0 / 1041.0, 1.6513, 1e-4);
    EXPECT_EQ(estimate_traversals(ledger, c, 1.65).estimate, 1042);
    EXPECT_EQ(estimate_traversals(ledger, c).estimate, 955);
    EXPECT_FALSE(estimate_traversals(ledger, c).exact_hops);
    ledger.learned_weight = 1.8;
    EXPECT_EQ(estimate_traversals(ledger, c).estimate, 1);
    ledger.learned_weight = 0;
    EXPECT_EQ(estimate_traversals(ledger, c).estimate, 0);
    ledger.hop_count = 3;
    EXPECT_EQ(estimate_traversals(ledger, c).exact_hops, 3);
    EXPECT_THROW(estimate_traversals(ledger, c, 0.0), Error);
}

TEST(AuditTest, LineFormatIsFixed) {
    EXPECT_EQ(format_iso8601(1054425600), "2003-06-01T00:00:00Z");
    EXPECT_EQ(format_audit_line(1054425630, "u1", {id("b1"), id("b3"), 0.3, Rule::Transitivity}),
              "2003-06-01T00:00:30Z\tu1\tb1\tb3\t0.3\ttransitivity");
    std::ostringstream out;
    AuditLog log(out);
    const std::vector<Reinforcement> rs{{id("b1"), id("b2"), 1.0, Rule::Frequency},
                                        {id("b2"), id("b1"), 0.5, Rule::Symmetry}};
    log.append(0, "s", rs);
    EXPECT_EQ(log.lines_written(), 2u);
    EXPECT_EQ(out.str(),
              "1970-01-01T00:00:00Z\ts\tb1\tb2\t1\tfrequency\n1970-01-01T00:00:00Z\ts\tb2\tb1\t0.5\tsymmetry\n");
}

TEST(FormatWeightTest, ShortestRoundTrip) {
    EXPECT_EQ(format_weight(0.5), "0.5");
    EXPECT_EQ(format_weight(0.1 + 0.2), "0.30000000000000004");
    EXPECT_EQ(std::stod(format_weight(1.0 / 3.0)), 1.0 / 3.0);
}
