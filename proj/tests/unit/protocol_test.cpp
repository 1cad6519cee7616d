#include <gtest/gtest.h>

#include <random>

#include "bucketnet/error.hpp"
#include "bucketnet/protocol.hpp"
#include "test_support.hpp"

using namespace bucketnet;
using bucketnet::testing::id;

namespace {

ErrorCode code_of(std::string_view url) {
    try {
        parse_method_request(url);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "parsed: " << url;
    return ErrorCode::InvalidParameters;
}

std::string nest(int depth) {
    // depth 0: /b0?method=display; depth k wraps k redirects around it
    std::string url = "/b" + std::to_string(depth) + "?method=display";
    for (int d = depth - 1; d >= 0; --d) {
        url = "/b" + std::to_string(d) + "?method=display&referer=b" + std::to_string(d) + "&redirect=" + url_encode(url);
    }
    return url;
}

}  // namespace

TEST(ParseMethodRequestTest, DisplayIsTheDefault) {
    const auto r = parse_method_request("/b1");
    EXPECT_EQ(r.bucket, id("b1"));
    EXPECT_EQ(r.method, BucketMethod::Display);
    EXPECT_FALSE(r.referer);
    EXPECT_FALSE(r.redirect);
    EXPECT_EQ(r.format, ResponseFormat::Html);
    EXPECT_EQ(parse_method_request("/b1/").bucket, id("b1"));
}

TEST(ParseMethodRequestTest, RefererAndRedirect) {
    const auto r = parse_method_request("/b1?method=display&referer=b1&redirect=%2Fb2%3Fmethod%3Ddisplay");
    EXPECT_EQ(r.referer, id("b1"));
    ASSERT_TRUE(r.redirect);
    EXPECT_EQ(r.redirect->bucket, id("b2"));
    EXPECT_EQ(r.redirect->method, BucketMethod::Display);
    EXPECT_EQ(r.innermost().bucket, id("b2"));
    EXPECT_EQ(r.redirect_depth(), 1u);
}

TEST(ParseMethodRequestTest, AbsoluteUrlsAndBareAuthority) {
    EXPECT_EQ(parse_method_request("http://host:8080/b7?method=display").bucket, id("b7"));
    const auto r = parse_method_request("http://b1?method=display&referer=b1&redirect=" +
                                        url_encode("http://b2?method=display"));
    EXPECT_EQ(r.bucket, id("b1"));
    EXPECT_EQ(r.innermost().bucket, id("b2"));
}

TEST(ParseMethodRequestTest, SessionFormatAndUnknownKeys) {
    const auto r = parse_method_request("/b1?session=abc%20d&format=json&utm=x");
    EXPECT_EQ(r.session, "abc d");
    EXPECT_EQ(r.format, ResponseFormat::Json);
    EXPECT_EQ(parse_method_request("/b1?accept=application%2Fjson").format, ResponseFormat::Json);
    EXPECT_EQ(parse_method_request("/b1?method=addElement").method, BucketMethod::AddElement);
}

TEST(ParseMethodRequestTest, NestingLimit) {
    EXPECT_EQ(parse_method_request(nest(3)).redirect_depth(), 3u);
    EXPECT_EQ(parse_method_request(nest(3)).innermost().bucket, id("b3"));
    EXPECT_EQ(code_of(nest(4)), ErrorCode::MalformedRedirect);
}

TEST(ParseMethodRequestTest, Errors) {
    EXPECT_EQ(code_of("/b1?method=delete"), ErrorCode::UnknownMethod);
    EXPECT_EQ(code_of("/b1?referer=no%20pe"), ErrorCode::MalformedRedirect);
    EXPECT_EQ(code_of("/b1?redirect=%2Fbad%20id"), ErrorCode::MalformedRedirect);
    EXPECT_EQ(code_of("/b1?redirect=%2Fb2%3Fmethod%3Dfly"), ErrorCode::MalformedRedirect);
    EXPECT_EQ(code_of("/b1?redirect=%zz"), ErrorCode::MalformedRedirect);
    EXPECT_EQ(code_of("/b1?session=%4"), ErrorCode::MalformedRedirect);
    EXPECT_EQ(code_of("/a/b"), ErrorCode::InvalidBucketId);
    EXPECT_EQ(code_of(""), ErrorCode::InvalidBucketId);
}

// Arbitrary byte strings either parse or raise a bucketnet::Error, nothing else.
TEST(ParseMethodRequestPropertyTest, TotalOverArbitraryStrings) {
    std::mt19937_64 rng(17);
    const std::string alphabet = "/?&=%:b1234aZ-_.~ \x01\xff#";
    std::uniform_int_distribution<std::size_t> len(0, 40), ch(0, alphabet.size() - 1);
    for (int i = 0; i < 5000; ++i) {
        std::string s;
        const std::size_t n = len(rng);
        for (std::size_t k = 0; k < n; ++k) s += alphabet[ch(rng)];
        try {
            const auto r = parse_method_request(s);
            ASSERT_TRUE(BucketId::is_valid(r.bucket.str()));
            ASSERT_LE(r.redirect_depth(), MethodRequest::kMaxRedirectDepth);
        } catch (const Error&) {
        }
    }
}

TEST(UrlCodingTest, RoundTrip) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> byte(0, 255), len(0, 30);
    for (int i = 0; i < 500; ++i) {
        std::string s;
        for (int k = len(rng); k > 0; --k) s += static_cast<char>(byte(rng));
        const auto encoded = url_encode(s);
        ASSERT_EQ(encoded.find_first_not_of("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_.~%"),
                  std::string::npos);
        ASSERT_EQ(url_decode(encoded), s);
    }
    EXPECT_FALSE(url_decode("%"));
    EXPECT_FALSE(url_decode("%4"));
    EXPECT_FALSE(url_decode("%g0"));
    EXPECT_EQ(url_decode("%41%62"), "Ab");
}

TEST(UrlBuildersTest, TraversalUrlParsesBack) {
    EXPECT_EQ(display_url(id("b2")), "/b2?method=display");
    EXPECT_EQ(display_url(id("b2"), "t", ResponseFormat::Json), "/b2?method=display&session=t&format=json");
    const auto url = traversal_url(id("b1"), id("b2"), "tok");
    EXPECT_EQ(url, "/b1?method=display&referer=b1&redirect=%2Fb2%3Fmethod%3Ddisplay&session=tok");
    const auto r = parse_method_request(url);
    EXPECT_EQ(r.bucket, id("b1"));
    EXPECT_EQ(r.referer, id("b1"));
    EXPECT_EQ(r.innermost().bucket, id("b2"));
    EXPECT_EQ(r.session, "tok");
}

TEST(UrlBuildersTest, HrefsAndQueries) {
    EXPECT_EQ(bucket_from_href("/b2"), id("b2"));
    EXPECT_EQ(bucket_from_href("/b2?method=display"), id("b2"));
    EXPECT_FALSE(bucket_from_href("http://example.org/b2"));
    EXPECT_FALSE(bucket_from_href("b2"));
    EXPECT_FALSE(bucket_from_href("/"));
    EXPECT_EQ(bucket_href(id("b9")), "/b9");
    const auto q = parse_query("a=1&b=x%20y&a=2&flag");
    EXPECT_EQ(q.at("a"), "2");
    EXPECT_EQ(q.at("b"), "x y");
    EXPECT_EQ(q.at("flag"), "");
}
