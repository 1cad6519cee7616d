#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bucketnet/bucket_id.hpp"
#include "bucketnet/link_graph.hpp"

namespace bucketnet {

enum class ElementKind { Content, Pointer };

/// One unit inside a bucket. Pointer elements carry an href; a pointer whose
/// href is a local bucket reference ("/b2") is a link and must carry a weight.
struct Element {
    std::string id;
    ElementKind kind = ElementKind::Content;
    std::optional<std::string> href;
    std::optional<double> weight;
    std::string display_name;

    /// Target bucket when this element is a weighted bucket link.
    std::optional<BucketId> link_target() const;

    friend bool operator==(const Element&, const Element&) = default;
};

/// Throws SchemaViolation when kind/href/weight are inconsistent.
void validate_element(const Element& element);

struct BucketRecord {
    BucketId id;
    std::string title;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<Element> elements;

    const Element* find_element(std::string_view element_id) const;

    friend bool operator==(const BucketRecord&, const BucketRecord&) = default;
};

/// Canonical XML:
///
///   <?xml version="1.0" encoding="UTF-8"?>
///   <bucket id="b001">
///     <metadata>
///       <field key="title">...</field>
///       <field key="biography">...</field>
///     </metadata>
///     <elements>
///       <element id="link-b002" kind="pointer" href="/b002" weight="0.5">Artist 002</element>
///     </elements>
///   </bucket>
///
/// The title travels as the first metadata field.
std::string serialize_bucket(const BucketRecord& record);

/// `source` names the input in error messages.
BucketRecord parse_bucket(std::string_view xml, std::string_view source = "<memory>");

/// A single `<element ...>displayName</element>` fragment.
Element parse_element_xml(std::string_view xml, std::string_view source = "<memory>");

BucketRecord load_bucket(const std::filesystem::path& path);

/// Write-temp-then-rename; the file is always one complete version.
void save_bucket(const BucketRecord& record, const std::filesystem::path& path);

/// Throws DuplicateElement if the id is taken; validates the element.
void add_element(BucketRecord& record, Element element);

/// Weighted bucket links of a record as graph edges.
std::vector<Link> record_links(const BucketRecord& record);

/// Rewrites the weighted link elements of `record` to match the graph's
/// outgoing links: existing elements take the graph weight, new edges are
/// appended as `link-<target>`, and links absent from the graph are removed.
/// `title_of` supplies display names for new elements.
template <typename TitleFn>
void apply_graph_links(BucketRecord& record, const LinkGraph& graph, TitleFn&& title_of);

/// Loads every `<id>.xml` in `dir` and builds the graph. Throws
/// SchemaViolation naming the file on malformed content, dangling hrefs or
/// id/file-name mismatches.
LinkGraph sync_graph(const std::filesystem::path& dir);

/// Directory of bucket files plus the small amount of state that has to
/// change together with them (the ledger file). Multi-file updates go
/// through a journal so a crash leaves either the old or the new state.
///
/// Layout: <root>/buckets/<id>.xml, <root>/ledger.json, <root>/journal/.
class BucketStore {
public:
    explicit BucketStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path bucket_dir() const { return root_ / "buckets"; }
    std::filesystem::path bucket_path(const BucketId& id) const;
    std::filesystem::path ledger_path() const { return root_ / "ledger.json"; }
    std::filesystem::path audit_path() const { return root_ / "audit.log"; }

    /// Completes or discards an interrupted journal, then loads all buckets.
    void open();

    bool empty_on_disk() const;

    const std::map<BucketId, BucketRecord>& records() const { return records_; }
    const BucketRecord& record(const BucketId& id) const;
    BucketRecord& mutable_record(const BucketId& id);
    bool contains(const BucketId& id) const { return records_.count(id) != 0; }

    void put(BucketRecord record);

    /// Graph built from the loaded records.
    LinkGraph graph() const;

    /// Copies graph weights into the records of `sources`.
    void apply_graph(const LinkGraph& graph, const std::set<BucketId>& sources);

    /// Atomically writes the given buckets and, if provided, the ledger text.
    void commit(const std::set<BucketId>& buckets, const std::optional<std::string>& ledger_json);

    /// Writes every bucket (and the ledger) in one commit.
    void commit_all(const std::optional<std::string>& ledger_json);

    std::optional<std::string> read_ledger() const;

private:
    std::filesystem::path journal_dir() const { return root_ / "journal"; }
    void recover_journal();

    std::filesystem::path root_;
    std::map<BucketId, BucketRecord> records_;
};

// ---------------------------------------------------------------------------

template <typename TitleFn>
void apply_graph_links(BucketRecord& record, const LinkGraph& graph, TitleFn&& title_of) {
    const auto& out = graph.out_links(record.id);
    std::set<BucketId> seen;
    std::vector<Element> kept;
    kept.reserve(record.elements.size() + out.size());
    for (auto& element : record.elements) {
        auto target = element.link_target();
        if (!target) {
            kept.push_back(std::move(element));
            continue;
        }
        auto it = out.find(*target);
        if (it == out.end() || seen.count(*target)) continue;
        element.weight = it->second;
        seen.insert(*target);
        kept.push_back(std::move(element));
    }
    std::set<std::string> ids;
    for (const auto& e : kept) ids.insert(e.id);
    for (const auto& [target, weight] : out) {
        if (seen.count(target)) continue;
        std::string id = "link-" + target.str();
        for (int suffix = 2; ids.count(id); ++suffix) id = "link-" + target.str() + "-" + std::to_string(suffix);
        ids.insert(id);
        kept.push_back(Element{id, ElementKind::Pointer, "/" + target.str(), weight, title_of(target)});
    }
    record.elements = std::move(kept);
}

}  // namespace bucketnet
