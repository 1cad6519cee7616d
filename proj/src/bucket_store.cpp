#include "bucketnet/bucket_store.hpp"

#include <expat.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "bucketnet/error.hpp"
#include "bucketnet/hebbian.hpp"
#include "bucketnet/protocol.hpp"

namespace fs = std::filesystem;

namespace bucketnet {

// ---------------------------------------------------------------------------
// Elements and records

std::optional<BucketId> Element::link_target() const {
    if (kind != ElementKind::Pointer || !href || !weight) return std::nullopt;
    return bucket_from_href(*href);
}

void validate_element(const Element& element) {
    if (element.id.empty()) throw Error(ErrorCode::SchemaViolation, "element without id");
    const std::string where = "element '" + element.id + "': ";
    if (element.kind == ElementKind::Content) {
        if (element.href) throw Error(ErrorCode::SchemaViolation, where + "content element with href");
        if (element.weight) throw Error(ErrorCode::SchemaViolation, where + "content element with weight");
        return;
    }
    if (!element.href || element.href->empty()) {
        throw Error(ErrorCode::SchemaViolation, where + "pointer element without href");
    }
    const bool local = !element.href->empty() && element.href->front() == '/';
    if (local) {
        if (!bucket_from_href(*element.href)) {
            throw Error(ErrorCode::SchemaViolation, where + "href '" + *element.href + "' is not a bucket");
        }
        if (!element.weight) throw Error(ErrorCode::SchemaViolation, where + "bucket link without weight");
        if (!std::isfinite(*element.weight) || *element.weight < 0.0) {
            throw Error(ErrorCode::SchemaViolation, where + "weight must be finite and >= 0");
        }
    } else if (element.weight) {
        throw Error(ErrorCode::SchemaViolation, where + "weight on a non-bucket pointer");
    }
}

const Element* BucketRecord::find_element(std::string_view element_id) const {
    auto it = std::find_if(elements.begin(), elements.end(),
                           [&](const Element& e) { return e.id == element_id; });
    return it == elements.end() ? nullptr : &*it;
}

void add_element(BucketRecord& record, Element element) {
    if (record.find_element(element.id)) {
        throw Error(ErrorCode::DuplicateElement, record.id.str() + "/" + element.id);
    }
    validate_element(element);
    if (auto target = element.link_target()) {
        if (*target == record.id) throw Error(ErrorCode::SchemaViolation, "bucket links to itself");
        for (const auto& e : record.elements) {
            if (e.link_target() == target) {
                throw Error(ErrorCode::SchemaViolation,
                            record.id.str() + " already links to " + target->str());
            }
        }
    }
    record.elements.push_back(std::move(element));
}

std::vector<Link> record_links(const BucketRecord& record) {
    std::vector<Link> links;
    for (const auto& e : record.elements) {
        if (auto target = e.link_target()) links.push_back({record.id, *target, *e.weight});
    }
    return links;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void escape_into(std::string& out, std::string_view text, bool attribute) {
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"':
                if (attribute) out += "&quot;"; else out += c;
                break;
            case '\n':
                if (attribute) out += "&#10;"; else out += c;
                break;
            case '\t':
                if (attribute) out += "&#9;"; else out += c;
                break;
            case '\r': out += "&#13;"; break;
            default: out += c;
        }
    }
}

void attr(std::string& out, std::string_view name, std::string_view value) {
    out += ' ';
    out += name;
    out += "=\"";
    escape_into(out, value, true);
    out += '"';
}

}  // namespace

std::string serialize_bucket(const BucketRecord& record) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<bucket";
    attr(out, "id", record.id.str());
    out += ">\n  <metadata>\n";
    auto field = [&](std::string_view key, std::string_view value) {
        out += "    <field";
        attr(out, "key", key);
        out += '>';
        escape_into(out, value, false);
        out += "</field>\n";
    };
    if (!record.title.empty()) field("title", record.title);
    for (const auto& [key, value] : record.metadata) {
        if (key == "title") throw Error(ErrorCode::SchemaViolation, "metadata key 'title' is reserved");
        field(key, value);
    }
    out += "  </metadata>\n  <elements>\n";
    for (const auto& e : record.elements) {
        validate_element(e);
        out += "    <element";
        attr(out, "id", e.id);
        attr(out, "kind", e.kind == ElementKind::Pointer ? "pointer" : "content");
        if (e.href) attr(out, "href", *e.href);
        if (e.weight) attr(out, "weight", format_weight(*e.weight));
        out += '>';
        escape_into(out, e.display_name, false);
        out += "</element>\n";
    }
    out += "  </elements>\n</bucket>\n";
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct XmlNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::string text;
    std::vector<std::unique_ptr<XmlNode>> children;

    const std::string* attribute(std::string_view key) const {
        for (const auto& [k, v] : attributes) {
            if (k == key) return &v;
        }
        return nullptr;
    }
};

struct ParseState {
    std::unique_ptr<XmlNode> root;
    std::vector<XmlNode*> stack;
};

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** atts) {
    auto* state = static_cast<ParseState*>(data);
    auto node = std::make_unique<XmlNode>();
    node->name = name;
    for (int i = 0; atts[i]; i += 2) node->attributes.emplace_back(atts[i], atts[i + 1]);
    XmlNode* raw = node.get();
    if (state->stack.empty()) {
        state->root = std::move(node);
    } else {
        state->stack.back()->children.push_back(std::move(node));
    }
    state->stack.push_back(raw);
}

void XMLCALL on_end(void* data, const XML_Char*) {
    static_cast<ParseState*>(data)->stack.pop_back();
}

void XMLCALL on_text(void* data, const XML_Char* s, int len) {
    auto* state = static_cast<ParseState*>(data);
    if (!state->stack.empty()) state->stack.back()->text.append(s, static_cast<std::size_t>(len));
}

std::unique_ptr<XmlNode> parse_xml(std::string_view xml, std::string_view source) {
    std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
        XML_ParserCreate("UTF-8"), &XML_ParserFree);
    if (!parser) throw Error(ErrorCode::IoFailure, "cannot create XML parser");
    ParseState state;
    XML_SetUserData(parser.get(), &state);
    XML_SetElementHandler(parser.get(), on_start, on_end);
    XML_SetCharacterDataHandler(parser.get(), on_text);
    if (XML_Parse(parser.get(), xml.data(), static_cast<int>(xml.size()), XML_TRUE) == XML_STATUS_ERROR) {
        std::ostringstream msg;
        msg << source << ":" << XML_GetCurrentLineNumber(parser.get()) << ": "
            << XML_ErrorString(XML_GetErrorCode(parser.get()));
        throw Error(ErrorCode::MalformedXml, msg.str());
    }
    if (!state.root) throw Error(ErrorCode::MalformedXml, std::string(source) + ": no root element");
    return std::move(state.root);
}

bool is_blank(std::string_view text) {
    return std::all_of(text.begin(), text.end(),
                       [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; });
}

[[noreturn]] void schema_error(std::string_view source, const std::string& what) {
    throw Error(ErrorCode::SchemaViolation, std::string(source) + ": " + what);
}

double parse_weight(const std::string& text, std::string_view source) {
    double value = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(value) || value < 0.0) {
        schema_error(source, "bad weight '" + text + "'");
    }
    return value;
}

Element parse_element(const XmlNode& node, std::string_view source) {
    if (node.name != "element") schema_error(source, "unexpected <" + node.name + "> in <elements>");
    if (!node.children.empty()) schema_error(source, "<element> must not have child elements");
    Element e;
    const std::string* id = node.attribute("id");
    const std::string* kind = node.attribute("kind");
    if (!id || id->empty()) schema_error(source, "<element> without id");
    if (!kind) schema_error(source, "element '" + *id + "' without kind");
    e.id = *id;
    if (*kind == "pointer") {
        e.kind = ElementKind::Pointer;
    } else if (*kind == "content") {
        e.kind = ElementKind::Content;
    } else {
        schema_error(source, "element '" + *id + "' has unknown kind '" + *kind + "'");
    }
    if (const auto* href = node.attribute("href")) e.href = *href;
    if (const auto* weight = node.attribute("weight")) e.weight = parse_weight(*weight, source);
    for (const auto& [k, v] : node.attributes) {
        if (k != "id" && k != "kind" && k != "href" && k != "weight") {
            schema_error(source, "element '" + *id + "' has unknown attribute '" + k + "'");
        }
    }
    e.display_name = node.text;
    try {
        validate_element(e);
    } catch (const Error& err) {
        schema_error(source, err.what());
    }
    return e;
}

}  // namespace

BucketRecord parse_bucket(std::string_view xml, std::string_view source) {
    const auto root = parse_xml(xml, source);
    if (root->name != "bucket") schema_error(source, "root element must be <bucket>");
    const std::string* id = root->attribute("id");
    if (!id || !BucketId::is_valid(*id)) schema_error(source, "<bucket> needs a valid id attribute");
    if (!is_blank(root->text)) schema_error(source, "stray text in <bucket>");

    BucketRecord record;
    record.id = BucketId(*id);
    bool seen_metadata = false;
    bool seen_elements = false;
    for (const auto& child : root->children) {
        if (!is_blank(child->text) && child->name != "field") {
            schema_error(source, "stray text in <" + child->name + ">");
        }
        if (child->name == "metadata" && !seen_metadata) {
            seen_metadata = true;
            bool seen_title = false;
            for (const auto& field : child->children) {
                const std::string* key = field->name == "field" ? field->attribute("key") : nullptr;
                if (!key) schema_error(source, "<metadata> holds only <field key=...>");
                if (*key == "title" && !seen_title) {
                    record.title = field->text;
                    seen_title = true;
                } else if (*key == "title") {
                    schema_error(source, "duplicate title field");
                } else {
                    record.metadata.emplace_back(*key, field->text);
                }
            }
        } else if (child->name == "elements" && !seen_elements) {
            seen_elements = true;
            for (const auto& node : child->children) {
                Element e = parse_element(*node, source);
                if (record.find_element(e.id)) schema_error(source, "duplicate element id '" + e.id + "'");
                record.elements.push_back(std::move(e));
            }
        } else {
            schema_error(source, "unexpected or repeated <" + child->name + ">");
        }
    }
    return record;
}

Element parse_element_xml(std::string_view xml, std::string_view source) {
    const auto root = parse_xml(xml, source);
    return parse_element(*root, source);
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void fsync_path(const fs::path& path, int flags) {
    int fd = ::open(path.c_str(), flags);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

/// Writes `content` to `path` and flushes it to disk.
void write_durable(const fs::path& path, std::string_view content) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(ErrorCode::IoFailure, "open " + path.string());
    std::size_t written = 0;
    while (written < content.size()) {
        ssize_t n = ::write(fd, content.data() + written, content.size() - written);
        if (n < 0) {
            ::close(fd);
            throw Error(ErrorCode::IoFailure, "write " + path.string());
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0 || ::close(fd) != 0) throw Error(ErrorCode::IoFailure, "sync " + path.string());
}

fs::path unique_temp_for(const fs::path& path) {
    static std::atomic<unsigned long> counter{0};
    return path.parent_path() /
           (path.filename().string() + ".tmp." + std::to_string(::getpid()) + "." +
            std::to_string(counter.fetch_add(1)));
}

void rename_or_throw(const fs::path& from, const fs::path& to) {
    std::error_code ec;
    fs::rename(from, to, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "rename " + from.string() + ": " + ec.message());
}

}  // namespace

BucketRecord load_bucket(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::NotFound, path.string());
    return parse_bucket(read_file(path), path.string());
}

void save_bucket(const BucketRecord& record, const fs::path& path) {
    const std::string content = serialize_bucket(record);
    const fs::path temp = unique_temp_for(path);
    write_durable(temp, content);
    rename_or_throw(temp, path);
}

namespace {

std::map<BucketId, BucketRecord> load_directory(const fs::path& dir) {
    std::map<BucketId, BucketRecord> records;
    if (!fs::is_directory(dir)) throw Error(ErrorCode::NotFound, dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        BucketRecord record = load_bucket(file);
        if (record.id.str() != file.stem().string()) {
            schema_error(file.string(), "bucket id '" + record.id.str() + "' does not match file name");
        }
        records.emplace(record.id, std::move(record));
    }
    return records;
}

LinkGraph build_graph(const std::map<BucketId, BucketRecord>& records, const fs::path& dir) {
    LinkGraph graph;
    for (const auto& [id, record] : records) graph.add_node(id);
    for (const auto& [id, record] : records) {
        const std::string file = (dir / (id.str() + ".xml")).string();
        for (const auto& link : record_links(record)) {
            if (!graph.contains(link.target)) {
                schema_error(file, "link to nonexistent bucket '" + link.target.str() + "'");
            }
            try {
                graph.add_link(link.source, link.target, link.weight);
            } catch (const Error& e) {
                schema_error(file, e.what());
            }
        }
    }
    return graph;
}

}  // namespace

LinkGraph sync_graph(const fs::path& dir) { return build_graph(load_directory(dir), dir); }

// ---------------------------------------------------------------------------
// BucketStore

BucketStore::BucketStore(fs::path root) : root_(std::move(root)) {}

fs::path BucketStore::bucket_path(const BucketId& id) const { return bucket_dir() / (id.str() + ".xml"); }

bool BucketStore::empty_on_disk() const {
    if (!fs::exists(root_)) return true;
    return fs::is_directory(root_) && fs::directory_iterator(root_) == fs::directory_iterator();
}

void BucketStore::open() {
    fs::create_directories(bucket_dir());
    recover_journal();
    for (const auto& entry : fs::directory_iterator(bucket_dir())) {
        if (entry.path().filename().string().find(".tmp.") != std::string::npos) fs::remove(entry.path());
    }
    records_ = load_directory(bucket_dir());
}

const BucketRecord& BucketStore::record(const BucketId& id) const {
    auto it = records_.find(id);
    if (it == records_.end()) throw Error(ErrorCode::UnknownBucket, id.str());
    return it->second;
}

BucketRecord& BucketStore::mutable_record(const BucketId& id) {
    auto it = records_.find(id);
    if (it == records_.end()) throw Error(ErrorCode::UnknownBucket, id.str());
    return it->second;
}

void BucketStore::put(BucketRecord record) {
    BucketId id = record.id;
    records_.insert_or_assign(std::move(id), std::move(record));
}

LinkGraph BucketStore::graph() const { return build_graph(records_, bucket_dir()); }

void BucketStore::apply_graph(const LinkGraph& graph, const std::set<BucketId>& sources) {
    auto title_of = [&](const BucketId& id) {
        auto it = records_.find(id);
        return it == records_.end() || it->second.title.empty() ? id.str() : it->second.title;
    };
    for (const auto& id : sources) apply_graph_links(mutable_record(id), graph, title_of);
}

void BucketStore::commit(const std::set<BucketId>& buckets, const std::optional<std::string>& ledger_json) {
    std::vector<std::pair<fs::path, std::string>> writes;  // (relative path, content)
    for (const auto& id : buckets) {
        writes.emplace_back(fs::path("buckets") / (id.str() + ".xml"), serialize_bucket(record(id)));
    }
    if (ledger_json) writes.emplace_back("ledger.json", *ledger_json);
    if (writes.empty()) return;

    const fs::path journal = journal_dir();
    fs::remove_all(journal);
    fs::create_directories(journal);
    std::string manifest;
    for (std::size_t i = 0; i < writes.size(); ++i) {
        write_durable(journal / std::to_string(i), writes[i].second);
        manifest += std::to_string(i) + '\t' + writes[i].first.string() + '\n';
    }
    write_durable(journal / "COMMIT.tmp", manifest);
    rename_or_throw(journal / "COMMIT.tmp", journal / "COMMIT");
    fsync_path(journal, O_RDONLY | O_DIRECTORY);
    // Past this point the new state is committed; recover_journal() finishes
    // the renames if we die before they are all done.
    recover_journal();
}

void BucketStore::commit_all(const std::optional<std::string>& ledger_json) {
    std::set<BucketId> all;
    for (const auto& [id, record] : records_) all.insert(id);
    commit(all, ledger_json);
}

void BucketStore::recover_journal() {
    const fs::path journal = journal_dir();
    if (!fs::exists(journal)) return;
    const fs::path marker = journal / "COMMIT";
    if (fs::exists(marker)) {
        std::istringstream lines(read_file(marker));
        std::string line;
        while (std::getline(lines, line)) {
            const auto tab = line.find('\t');
            if (tab == std::string::npos) continue;
            const fs::path staged = journal / line.substr(0, tab);
            const fs::path target = root_ / line.substr(tab + 1);
            if (fs::exists(staged)) {
                fs::create_directories(target.parent_path());
                rename_or_throw(staged, target);
            }
        }
        fsync_path(bucket_dir(), O_RDONLY | O_DIRECTORY);
        fsync_path(root_, O_RDONLY | O_DIRECTORY);
    }
    fs::remove_all(journal);
}

std::optional<std::string> BucketStore::read_ledger() const {
    if (!fs::exists(ledger_path())) return std::nullopt;
    return read_file(ledger_path());
}

}  // namespace bucketnet
