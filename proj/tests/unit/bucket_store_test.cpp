#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "bucketnet/bucket_store.hpp"
#include "bucketnet/error.hpp"
#include "bucketnet/network_driver.hpp"
#include "bucketnet/simulator.hpp"
#include "test_support.hpp"

using namespace bucketnet;
using bucketnet::testing::id;
using bucketnet::testing::TempDir;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidParameters;
}

BucketRecord sample() {
    BucketRecord r;
    r.id = id("b1");
    r.title = "Public Enemy & Friends <live>";
    r.metadata = {{"biography", "Formed in 1982. \"Quotes\" too."}, {"genre", "hip-hop"}};
    r.elements = {
        Element{"bio", ElementKind::Content, {}, {}, "Short biography"},
        Element{"link-b2", ElementKind::Pointer, "/b2", 1.8, "Bucket 2"},
        Element{"link-b3", ElementKind::Pointer, "/b3", 0.1 + 0.2, "Bucket 3"},
        Element{"homepage", ElementKind::Pointer, "http://example.org/?a=1&b=2", {}, "Homepage"},
    };
    return r;
}

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(BucketXmlTest, RoundTripIsExactAndDeterministic) {
    const auto r = sample();
    const std::string xml = serialize_bucket(r);
    EXPECT_EQ(parse_bucket(xml), r);
    EXPECT_EQ(serialize_bucket(parse_bucket(xml)), xml);
    EXPECT_EQ(*parse_bucket(xml).elements[2].weight, 0.1 + 0.2);
}

TEST(BucketXmlTest, CanonicalLayout) {
    BucketRecord r;
    r.id = id("b001");
    r.title = "Bucket 001";
    r.metadata = {{"biography", "bio"}};
    r.elements = {Element{"link-b002", ElementKind::Pointer, "/b002", 0.5, "Bucket 002"}};
    EXPECT_EQ(serialize_bucket(r),
              "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
              "<bucket id=\"b001\">\n"
              "  <metadata>\n"
              "    <field key=\"title\">Bucket 001</field>\n"
              "    <field key=\"biography\">bio</field>\n"
              "  </metadata>\n"
              "  <elements>\n"
              "    <element id=\"link-b002\" kind=\"pointer\" href=\"/b002\" weight=\"0.5\">Bucket 002</element>\n"
              "  </elements>\n"
              "</bucket>\n");
}

TEST(BucketXmlTest, AttributeOrderIsCanonicalized) {
    const std::string xml =
        "<bucket id='b1'><metadata><field key='title'>T</field></metadata><elements>"
        "<element weight='0.5' href='/b2' kind='pointer' id='x'>B2</element></elements></bucket>";
    const auto r = parse_bucket(xml);
    EXPECT_NE(serialize_bucket(r).find("<element id=\"x\" kind=\"pointer\" href=\"/b2\" weight=\"0.5\">"),
              std::string::npos);
}

TEST(BucketXmlTest, MinimalAndThreeLinks) {
    const auto empty = parse_bucket("<bucket id=\"b9\"><metadata/><elements/></bucket>");
    EXPECT_TRUE(empty.elements.empty());
    EXPECT_EQ(empty.title, "");
    const auto three = parse_bucket(
        "<bucket id=\"b1\"><elements>"
        "<element id=\"l2\" kind=\"pointer\" href=\"/b2\" weight=\"0.5\">2</element>"
        "<element id=\"l3\" kind=\"pointer\" href=\"/b3\" weight=\"0.5\">3</element>"
        "<element id=\"l4\" kind=\"pointer\" href=\"/b4\" weight=\"0.5\">4</element>"
        "</elements></bucket>");
    ASSERT_EQ(three.elements.size(), 3u);
    for (const auto& e : three.elements) EXPECT_EQ(e.kind, ElementKind::Pointer);
    EXPECT_EQ(record_links(three).size(), 3u);
}

TEST(BucketXmlTest, SchemaErrors) {
    auto parse = [](const std::string& xml) { return [xml] { parse_bucket(xml); }; };
    EXPECT_EQ(code_of(parse("<bucket id=\"b1\"><elements>")), ErrorCode::MalformedXml);
    EXPECT_EQ(code_of(parse("not xml")), ErrorCode::MalformedXml);
    EXPECT_EQ(code_of(parse("<bucket id=\"b1\"><elements><element id=\"l\" kind=\"pointer\" "
                            "href=\"/b2\">x</element></elements></bucket>")),
              ErrorCode::SchemaViolation);
    EXPECT_EQ(code_of(parse("<bucket id=\"b1\"><elements><element id=\"l\" kind=\"content\" "
                            "href=\"/b2\">x</element></elements></bucket>")),
              ErrorCode::SchemaViolation);
    EXPECT_EQ(code_of(parse("<bucket id=\"b1\"><elements><element id=\"l\" kind=\"pointer\" "
                            "href=\"/b2\" weight=\"heavy\">x</element></elements></bucket>")),
              ErrorCode::SchemaViolation);
    EXPECT_EQ(code_of(parse("<bucket id=\"b1\"><elements><element id=\"l\" kind=\"pointer\" href=\"/b2\" "
                            "weight=\"1\">x</element><element id=\"l\" kind=\"content\">y</element>"
                            "</elements></bucket>")),
              ErrorCode::SchemaViolation);
    EXPECT_EQ(code_of(parse("<thing id=\"b1\"/>")), ErrorCode::SchemaViolation);
    EXPECT_EQ(code_of(parse("<bucket id=\"bad id\"/>")), ErrorCode::SchemaViolation);
}

TEST(BucketXmlTest, ElementFragment) {
    const auto e = parse_element_xml("<element id=\"n\" kind=\"pointer\" href=\"/b7\" weight=\"0.3\">Seven</element>");
    EXPECT_EQ(e.link_target(), id("b7"));
    EXPECT_EQ(e.display_name, "Seven");
    EXPECT_THROW(parse_element_xml("<element id=\"n\" kind=\"pointer\">x</element>"), Error);
}

TEST(BucketRecordTest, AddElement) {
    auto r = sample();
    const auto before = r.elements.size();
    add_element(r, Element{"link-b4", ElementKind::Pointer, "/b4", 0.3, "Bucket 4"});
    EXPECT_EQ(r.elements.size(), before + 1);
    add_element(r, Element{"bio2", ElementKind::Content, {}, {}, "More biography"});
    EXPECT_EQ(record_links(r).size(), 3u);
    EXPECT_EQ(code_of([&] { add_element(r, Element{"bio2", ElementKind::Content, {}, {}, "x"}); }),
              ErrorCode::DuplicateElement);
    EXPECT_EQ(code_of([&] { add_element(r, Element{"self", ElementKind::Pointer, "/b1", 1.0, "me"}); }),
              ErrorCode::SchemaViolation);
    EXPECT_EQ(code_of([&] { add_element(r, Element{"ext", ElementKind::Pointer, "http://x", 1.0, "w"}); }),
              ErrorCode::SchemaViolation);
}

TEST(BucketRecordTest, ApplyGraphLinksBijection) {
    auto r = sample();
    LinkGraph g;
    for (const char* n : {"b1", "b2", "b3", "b4"}) g.add_node(id(n));
    g.add_link(id("b1"), id("b2"), 2.5);
    g.add_link(id("b1"), id("b4"), 0.3);
    apply_graph_links(r, g, [](const BucketId& b) { return "Title " + b.str(); });
    const auto links = record_links(r);
    std::vector<Link> expected{{id("b1"), id("b2"), 2.5}, {id("b1"), id("b4"), 0.3}};
    std::vector<Link> sorted = links;
    std::sort(sorted.begin(), sorted.end(), [](const Link& a, const Link& b) { return a.target < b.target; });
    EXPECT_EQ(sorted, expected);
    EXPECT_NE(r.find_element("bio"), nullptr);
    EXPECT_NE(r.find_element("homepage"), nullptr);
    EXPECT_EQ(r.find_element("link-b4")->display_name, "Title b4");
}

TEST(BucketFileTest, SaveLoadAndNotFound) {
    TempDir dir;
    const auto path = dir.path() / "b1.xml";
    save_bucket(sample(), path);
    EXPECT_EQ(load_bucket(path), sample());
    EXPECT_EQ(code_of([&] { load_bucket(dir.path() / "nope.xml"); }), ErrorCode::NotFound);
    int stray = 0;
    for (const auto& e : fs::directory_iterator(dir.path())) stray += e.path().filename() != "b1.xml";
    EXPECT_EQ(stray, 0);
}

TEST(BucketFileTest, ConcurrentSavesLeaveOneCompleteVersion) {
    TempDir dir;
    const auto path = dir.path() / "b1.xml";
    std::vector<std::thread> writers;
    for (int t = 0; t < 8; ++t) {
        writers.emplace_back([&, t] {
            auto r = sample();
            r.metadata.push_back({"writer", std::to_string(t)});
            for (int k = 0; k < 200; ++k) r.metadata.push_back({"pad" + std::to_string(k), std::string(50, 'x')});
            for (int i = 0; i < 20; ++i) save_bucket(r, path);
        });
    }
    for (auto& w : writers) w.join();
    const auto loaded = load_bucket(path);
    EXPECT_EQ(loaded.metadata.size(), 2u + 1u + 200u);
    EXPECT_EQ(serialize_bucket(loaded), read_text(path));
}

TEST(SyncGraphTest, FreshNetworkAndEmptyDir) {
    TempDir dir;
    EXPECT_EQ(sync_graph(dir.path()).node_count(), 0u);
    const auto net = init_network({});
    for (const auto& r : net.records) save_bucket(r, dir.path() / (r.id.str() + ".xml"));
    const auto g = sync_graph(dir.path());
    EXPECT_EQ(g.node_count(), 150u);
    EXPECT_EQ(g.link_count(), 450u);
    EXPECT_DOUBLE_EQ(g.total_weight(), 225.0);
    EXPECT_TRUE(g == net.graph);
}

TEST(SyncGraphTest, DanglingHrefAndNameMismatch) {
    TempDir dir;
    BucketRecord r;
    r.id = id("b1");
    r.elements = {Element{"l", ElementKind::Pointer, "/ghost", 0.5, "Ghost"}};
    save_bucket(r, dir.path() / "b1.xml");
    try {
        sync_graph(dir.path());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
        EXPECT_NE(std::string(e.what()).find("b1.xml"), std::string::npos);
    }
    TempDir other;
    BucketRecord s;
    s.id = id("b2");
    save_bucket(s, other.path() / "b3.xml");
    EXPECT_EQ(code_of([&] { sync_graph(other.path()); }), ErrorCode::SchemaViolation);
}

TEST(BucketStoreTest, CommitAndReopen) {
    TempDir dir;
    {
        BucketStore store(dir.path());
        EXPECT_TRUE(store.empty_on_disk());
        store.open();
        for (auto& r : init_network({10, 2, 0.5, 3}).records) store.put(std::move(r));
        store.commit_all(std::string("{\"x\":1}\n"));
    }
    BucketStore again(dir.path());
    EXPECT_FALSE(again.empty_on_disk());
    again.open();
    EXPECT_EQ(again.records().size(), 10u);
    EXPECT_EQ(again.graph().link_count(), 20u);
    EXPECT_EQ(*again.read_ledger(), "{\"x\":1}\n");
    EXPECT_FALSE(fs::exists(dir.path() / "journal"));
}

TEST(BucketStoreTest, CommittedJournalIsRolledForward) {
    TempDir dir;
    BucketStore store(dir.path());
    store.open();
    for (auto& r : init_network({10, 2, 0.5, 3}).records) store.put(std::move(r));
    store.commit_all(std::string("old"));

    // A crash after COMMIT but before the renames finished.
    auto changed = store.record(id("b001"));
    changed.title = "Changed";
    write_text(dir.path() / "journal" / "0", serialize_bucket(changed));
    write_text(dir.path() / "journal" / "1", "new");
    write_text(dir.path() / "journal" / "COMMIT", "0\tbuckets/b001.xml\n1\tledger.json\n");

    BucketStore reopened(dir.path());
    reopened.open();
    EXPECT_EQ(reopened.record(id("b001")).title, "Changed");
    EXPECT_EQ(*reopened.read_ledger(), "new");
    EXPECT_FALSE(fs::exists(dir.path() / "journal"));
}

TEST(BucketStoreTest, UncommittedJournalIsDiscarded) {
    TempDir dir;
    BucketStore store(dir.path());
    store.open();
    for (auto& r : init_network({10, 2, 0.5, 3}).records) store.put(std::move(r));
    store.commit_all(std::string("old"));
    write_text(dir.path() / "journal" / "0", "<bucket id=\"b001\"><half");
    write_text(dir.path() / "journal" / "COMMIT.tmp", "0\tbuckets/b001.xml\n");
    write_text(dir.path() / "buckets" / "b002.xml.tmp.123", "<partial");

    BucketStore reopened(dir.path());
    reopened.open();
    EXPECT_EQ(reopened.record(id("b001")).title, "Bucket 001");
    EXPECT_EQ(*reopened.read_ledger(), "old");
    EXPECT_FALSE(fs::exists(dir.path() / "buckets" / "b002.xml.tmp.123"));
}

TEST(NetworkDriverTest, ConcurrentTraversalsAreSerialized) {
    TempDir dir;
    {
        BucketStore store(dir.path());
        store.open();
        auto net = init_network({12, 3, 0.5, 9});
        for (auto& r : net.records) store.put(std::move(r));
        WeightLedger l;
        l.initial_weight = net.graph.total_weight();
        store.commit_all(ledger_to_json(l).dump());
    }
    {
        NetworkDriver driver(dir.path());
        const auto nodes = driver.graph_snapshot().nodes();
        std::vector<std::thread> users;
        for (int u = 0; u < 4; ++u) {
            users.emplace_back([&, u] {
                SimRng rng(u + 1);
                const std::string session = "u" + std::to_string(u);
                BucketId at = nodes[0];
                driver.traverse(session, std::nullopt, at);
                for (int i = 0; i < 15; ++i) {
                    BucketId next = nodes[rng.below(nodes.size())];
                    if (next == at) continue;
                    driver.traverse(session, at, next);
                    at = next;
                }
            });
        }
        for (auto& t : users) t.join();
    }
    BucketStore store(dir.path());
    store.open();
    const auto ledger = ledger_from_json(nlohmann::json::parse(*store.read_ledger()));
    EXPECT_GT(ledger.hop_count, 0);
    EXPECT_NEAR(ledger.identity_residual({}), 0.0, 1e-9);
    EXPECT_NEAR(store.graph().total_weight(), ledger.initial_weight + ledger.learned_weight, 1e-9);
}

TEST(NetworkDriverTest, AddElementUpdatesGraph) {
    NetworkDriver driver(init_network({5, 1, 0.5, 1}).graph);
    EXPECT_THROW(driver.add_element(id("b1"), Element{"x", ElementKind::Content, {}, {}, "hi"}), Error);
}
