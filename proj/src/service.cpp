#include "bucketnet/service.hpp"

#include <charconv>
#include <sstream>

#include "bucketnet/centrality.hpp"
#include "bucketnet/error.hpp"
#include "bucketnet/path_weight.hpp"

namespace bucketnet {

const std::string* HttpResponse::header(std::string_view name) const {
    for (const auto& [k, v] : headers) {
        if (k == name) return &v;
    }
    return nullptr;
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownBucket:
        case ErrorCode::NotFound:
        case ErrorCode::TargetNotInTree:
            return 404;
        case ErrorCode::DuplicateElement:
        case ErrorCode::DuplicateLink:
            return 409;
        case ErrorCode::IoFailure:
            return 500;
        default:
            return 400;
    }
}

nlohmann::json to_json(const DisplayPayload& payload) {
    nlohmann::json j;
    j["bucket"] = payload.bucket.str();
    j["title"] = payload.title;
    j["metadata"] = nlohmann::json::array();
    for (const auto& [k, v] : payload.metadata) j["metadata"].push_back({{"key", k}, {"value", v}});
    j["content"] = nlohmann::json::array();
    for (const auto& e : payload.content) {
        nlohmann::json c{{"id", e.id}, {"displayName", e.display_name}};
        if (e.href) c["href"] = *e.href;
        j["content"].push_back(std::move(c));
    }
    j["links"] = nlohmann::json::array();
    for (const auto& l : payload.links) {
        j["links"].push_back({{"displayName", l.display_name},
                              {"target", l.target.str()},
                              {"url", l.url},
                              {"weight", l.weight}});
    }
    j["session"] = payload.session;
    return j;
}

namespace {

std::string html_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

HttpResponse error_response(const Error& e, ResponseFormat format) {
    HttpResponse r;
    r.status = status_for(e.code());
    if (format == ResponseFormat::Json) {
        r.content_type = "application/json";
        r.body = nlohmann::json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump();
    } else {
        r.body = std::string(e.what()) + "\n";
    }
    return r;
}

std::size_t parse_size(const std::map<std::string, std::string>& params, const std::string& key,
                       std::size_t fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    std::size_t value = 0;
    const auto& s = it->second;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || end != s.data() + s.size() || value == 0) {
        throw Error(ErrorCode::InvalidParameters, key + " must be a positive integer");
    }
    return value;
}

}  // namespace

std::string render_html(const DisplayPayload& payload) {
    std::ostringstream out;
    out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << html_escape(payload.title)
        << "</title></head>\n<body>\n<h1>" << html_escape(payload.title) << "</h1>\n";
    for (const auto& [k, v] : payload.metadata) {
        out << "<p class=\"meta\"><b>" << html_escape(k) << ":</b> " << html_escape(v) << "</p>\n";
    }
    for (const auto& e : payload.content) out << "<div class=\"content\">" << html_escape(e.display_name) << "</div>\n";
    if (payload.links.empty()) {
        out << "<p>No related buckets.</p>\n";
    } else {
        out << "<ol class=\"links\">\n";
        for (const auto& l : payload.links) {
            out << "<li><a href=\"" << html_escape(l.url) << "\">" << html_escape(l.display_name) << "</a></li>\n";
        }
        out << "</ol>\n";
    }
    out << "</body></html>\n";
    return out.str();
}

Element parse_element_body(std::string_view body, std::string_view content_type) {
    std::size_t first = body.find_first_not_of(" \t\r\n");
    const bool looks_xml = content_type.find("xml") != std::string_view::npos ||
                           (first != std::string_view::npos && body[first] == '<');
    if (looks_xml) return parse_element_xml(body, "request body");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("element body: ") + e.what());
    }
    try {
        Element e;
        e.id = j.at("id").get<std::string>();
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "pointer") {
            e.kind = ElementKind::Pointer;
        } else if (kind == "content") {
            e.kind = ElementKind::Content;
        } else {
            throw Error(ErrorCode::SchemaViolation, "unknown element kind '" + kind + "'");
        }
        if (j.contains("href")) e.href = j["href"].get<std::string>();
        if (j.contains("weight")) e.weight = j["weight"].get<double>();
        if (j.contains("displayName")) e.display_name = j["displayName"].get<std::string>();
        validate_element(e);
        return e;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, std::string("element body: ") + e.what());
    }
}

BucketService::BucketService(NetworkDriver& driver, ServiceOptions options)
    : driver_(driver), options_(std::move(options)) {}

DisplayPayload BucketService::display_payload(const BucketId& bucket, const std::string& session,
                                              ResponseFormat format) const {
    const DisplaySnapshot snap = driver_.display(bucket);
    DisplayPayload payload;
    payload.bucket = bucket;
    payload.title = snap.record.title.empty() ? bucket.str() : snap.record.title;
    payload.metadata = snap.record.metadata;
    for (const auto& e : snap.record.elements) {
        if (!e.link_target()) payload.content.push_back(e);
    }
    for (const auto& link : snap.links) {
        payload.links.push_back({link.display_name, link.target,
                                 traversal_url(bucket, link.target, session, format), link.weight});
    }
    payload.session = session;
    return payload;
}

HttpResponse BucketService::handle(const HttpRequest& request) {
    ResponseFormat format = request.accepts_json ? ResponseFormat::Json : ResponseFormat::Html;
    try {
        const std::string_view target = request.target;
        const auto q = target.find('?');
        const std::string_view path = target.substr(0, q);
        const std::string_view query = q == std::string_view::npos ? std::string_view{} : target.substr(q + 1);
        if (path.starts_with("/_analytics/")) return handle_analytics(path, query);

        MethodRequest parsed = parse_method_request(target);
        if (parsed.format == ResponseFormat::Json) format = ResponseFormat::Json;

        std::string session = parsed.session   ? *parsed.session
                              : request.cookie_session ? *request.cookie_session
                                                       : driver_.issue_session_token();
        HttpResponse response;
        if (parsed.method == BucketMethod::AddElement) {
            if (request.method != "POST") {
                response.status = 405;
                response.body = "addElement requires POST\n";
            } else {
                response = handle_add_element(parsed, request);
            }
        } else {
            response = handle_display(parsed, session, format);
        }
        response.headers.emplace_back("Set-Cookie", std::string(kSessionCookie) + "=" + session + "; Path=/");
        return response;
    } catch (const Error& e) {
        return error_response(e, format);
    }
}

HttpResponse BucketService::handle_display(const MethodRequest& request, const std::string& session,
                                           ResponseFormat format) {
    if (!driver_.contains(request.bucket)) throw Error(ErrorCode::UnknownBucket, request.bucket.str());
    HttpResponse response;
    if (request.redirect) {
        const BucketId& destination = request.innermost().bucket;
        if (!driver_.contains(destination)) {
            throw Error(ErrorCode::MalformedRedirect, "redirect to unknown bucket '" + destination.str() + "'");
        }
        const HopOutcome hop = driver_.traverse(session, request.referer, destination);
        const std::string location = display_url(destination, session, format);
        response.status = 302;
        response.headers.emplace_back("Location", location);
        nlohmann::json applied = nlohmann::json::array();
        for (const auto& r : hop.applied) {
            applied.push_back({{"source", r.source.str()},
                               {"target", r.target.str()},
                               {"delta", r.delta},
                               {"rule", std::string(to_string(r.rule))}});
        }
        response.content_type = "application/json";
        response.body = nlohmann::json{{"redirect", location}, {"applied", applied}}.dump();
        return response;
    }

    driver_.enter(session, request.bucket);
    const DisplayPayload payload = display_payload(request.bucket, session, format);
    if (format == ResponseFormat::Json) {
        response.content_type = "application/json";
        response.body = to_json(payload).dump();
    } else {
        response.content_type = "text/html; charset=utf-8";
        response.body = render_html(payload);
    }
    return response;
}

HttpResponse BucketService::handle_add_element(const MethodRequest& request, const HttpRequest& raw) {
    if (!driver_.contains(request.bucket)) throw Error(ErrorCode::UnknownBucket, request.bucket.str());
    Element element = parse_element_body(raw.body, raw.content_type);
    const std::string id = element.id;
    driver_.add_element(request.bucket, std::move(element));
    HttpResponse response;
    response.status = 201;
    response.content_type = "application/json";
    response.body = nlohmann::json{{"status", "ok"}, {"bucket", request.bucket.str()}, {"element", id}}.dump();
    return response;
}

HttpResponse BucketService::handle_analytics(std::string_view path, std::string_view query) {
    const auto params = parse_query(query);
    const LinkGraph graph = driver_.graph_snapshot();
    HttpResponse response;
    if (path == "/_analytics/centrality") {
        auto metric_it = params.find("metric");
        const CentralityMetric metric =
            parse_centrality_metric(metric_it == params.end() ? "degree" : metric_it->second);
        const std::size_t k = parse_size(params, "k", graph.node_count() == 0 ? 1 : graph.node_count());
        std::ostringstream csv;
        write_centrality_csv(csv, graph, metric, k);
        response.content_type = "text/csv";
        response.body = csv.str();
        return response;
    }
    if (path == "/_analytics/hierarchy") {
        auto root_it = params.find("root");
        const BucketId root = root_it == params.end() ? options_.portal : BucketId(root_it->second);
        HierarchyOptions opts;
        opts.depth_limit = parse_size(params, "depth", opts.depth_limit);
        opts.branch_limit = parse_size(params, "branch", opts.branch_limit);
        if (auto it = params.find("min_weight"); it != params.end()) {
            try {
                opts.min_weight = std::stod(it->second);
            } catch (const std::exception&) {
                throw Error(ErrorCode::InvalidParameters, "min_weight must be a number");
            }
        }
        response.content_type = "application/json";
        response.body = hierarchy_to_json(extract_hierarchy(graph, root, opts)).dump(2);
        return response;
    }
    throw Error(ErrorCode::NotFound, std::string(path));
}

}  // namespace bucketnet
