#include <gtest/gtest.h>

#include <json.hpp>

#include "somlist/errors.hpp"
#include "somlist/listparse.hpp"
#include "support.hpp"

using namespace som;
using testsupport::fixtures;

namespace {

std::vector<int> ids(const ParsedListing& p) {
    std::vector<int> out;
    for (const auto& it : p.items) out.push_back(it.tag_id);
    return out;
}

}  // namespace

TEST(Parse, CanonicalInlineForm) {
    const ParsedListing p = parse_listing("1. person, 2. cat, 3. dog.");
    ASSERT_EQ(p.items.size(), 3u);
    EXPECT_EQ(p.items[0].description, "person");
    EXPECT_EQ(p.items[1].description, "cat");
    EXPECT_EQ(p.items[2].description, "dog");
    EXPECT_TRUE(p.residual.empty());
}

TEST(Parse, OneItemPerLineWithPreambleAndCoda) {
    const ParsedListing p = parse_listing("Here are the items:\n1. A white vase.\n2) Some flowers\n3: A railing\nThat is all.");
    EXPECT_EQ(ids(p), (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(p.items[0].description, "A white vase");
    EXPECT_EQ(p.items[2].description, "A railing");
    EXPECT_EQ(p.residual, "Here are the items:\nThat is all.");
}

TEST(Parse, TagForms) {
    const ParsedListing p = parse_listing("- Tag 1 is on the water.\n- Tag 2: a boat\nTag 3 - the dock");
    EXPECT_EQ(ids(p), (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(p.items[0].description, "on the water");
    EXPECT_EQ(p.items[1].description, "a boat");
    EXPECT_EQ(p.items[2].description, "the dock");
}

TEST(Parse, DuplicateIdFirstWins) {
    const ParsedListing p = parse_listing("1. dog\n2. ball\n2. grass\n3. grass");
    EXPECT_EQ(ids(p), (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(p.items[1].description, "ball");
    EXPECT_EQ(p.residual, "2. grass");
}

TEST(Parse, NestedEnumeratorsIgnored) {
    const ParsedListing p = parse_listing("1. Fruit\n   1. apple\n   2. pear\n2. Bread");
    EXPECT_EQ(ids(p), (std::vector<int>{1, 2}));
    EXPECT_EQ(p.items[1].description, "Bread");
}

TEST(Parse, NoListingIsAllResidual) {
    const ParsedListing p = parse_listing("A horse in a field.");
    EXPECT_TRUE(p.items.empty());
    EXPECT_EQ(p.residual, "A horse in a field.");
    EXPECT_TRUE(parse_listing("").items.empty());
}

TEST(Parse, DecimalsAndVersionsAreNotItems) {
    EXPECT_TRUE(parse_listing("Version 2.0 released in 1999.").items.empty());
    EXPECT_TRUE(parse_listing("It costs 3.50 dollars.").items.empty());
    EXPECT_TRUE(parse_listing("1999. A good year.").items.empty());
}

TEST(Parse, TwoShotTranscriptGivesNineIds) {
    const std::string text = testsupport::slurp(fixtures() / "transcripts" / "woman_by_water_2shot.txt");
    const ParsedListing p = parse_listing(text);
    EXPECT_EQ(ids(p), (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9}));
    EXPECT_EQ(p.items[6].description, "Clear blue sky");
    EXPECT_EQ(p.residual, "Here's a list of the tagged items in the image:");
    EXPECT_TRUE(detect_listing(text).has_listing);
}

TEST(Detect, KiteAnswerIsAListing) {
    const std::string text = testsupport::slurp(fixtures() / "transcripts" / "kite_answer.txt");
    const auto d = detect_listing(text);
    EXPECT_TRUE(d.has_listing);
    EXPECT_EQ(d.item_count, 5);
    ASSERT_EQ(d.spans.size(), 1u);
}

TEST(Detect, RequiresTwoConsecutiveItemsFromOne) {
    EXPECT_FALSE(detect_listing("1. Introduction").has_listing);
    EXPECT_FALSE(detect_listing("3. third\n4. fourth").has_listing);
    EXPECT_FALSE(detect_listing("1. a\n3. c").has_listing);
    EXPECT_TRUE(detect_listing("1. a\n2. b").has_listing);
}

TEST(Detect, HandLabeledSetPrecisionRecall) {
    std::istringstream in(testsupport::slurp(fixtures() / "detection.jsonl"));
    std::string line;
    int tp = 0, fp = 0, fn = 0, n = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        const bool truth = j["listing"].get<bool>();
        const bool got = detect_listing(j["text"].get<std::string>()).has_listing;
        tp += truth && got;
        fp += !truth && got;
        fn += truth && !got;
        ++n;
        EXPECT_EQ(got, truth) << j["id"].get<std::string>();
    }
    EXPECT_EQ(n, 50);
    EXPECT_GE(static_cast<double>(tp) / (tp + fp), 0.95);
    EXPECT_GE(static_cast<double>(tp) / (tp + fn), 0.95);
}

TEST(Probe, CorpusPercentage) {
    const ProbeStats s = probe_file(fixtures() / "probe_corpus.jsonl");
    EXPECT_EQ(s.total, 100);
    EXPECT_EQ(s.listing, 7);
    EXPECT_EQ(s.percentage_text(), "7.00");
    EXPECT_EQ(probe_tsv_line("x", s), "x\t100\t7\t7.00%");
}

TEST(Probe, EmptyCorpusIsZero) {
    const ProbeStats s = probe_corpus({});
    EXPECT_EQ(s.total, 0);
    EXPECT_EQ(s.percentage(), 0.0);
}

TEST(Probe, ArrayAndLinesAgreeAndShardsMerge) {
    testsupport::TempDir dir("probe");
    std::istringstream in(testsupport::slurp(fixtures() / "probe_corpus.jsonl"));
    std::string line;
    nlohmann::json arr = nlohmann::json::array();
    std::vector<std::string> texts;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        texts.push_back(j["conversations"][1]["value"].get<std::string>());
        arr.push_back(std::move(j));
    }
    testsupport::spit(dir / "corpus.json", arr.dump(1));
    EXPECT_EQ(probe_file(dir / "corpus.json"), probe_file(fixtures() / "probe_corpus.jsonl"));

    ProbeStats merged = probe_corpus({texts.begin(), texts.begin() + 40});
    merged += probe_corpus({texts.begin() + 40, texts.end()});
    EXPECT_EQ(merged, probe_corpus(texts));
}

TEST(Probe, ChatMessagesAndTextShapes) {
    testsupport::TempDir dir("probe-shapes");
    testsupport::spit(dir / "chat.jsonl",
                      R"({"messages":[{"role":"user","content":"hi"},{"role":"assistant","content":"1. a\n2. b"}]})"
                      "\n"
                      R"({"text":"plain caption"})"
                      "\n");
    const ProbeStats s = probe_file(dir / "chat.jsonl");
    EXPECT_EQ(s.total, 2);
    EXPECT_EQ(s.listing, 1);
}

TEST(Probe, MalformedFileIsParseError) {
    testsupport::TempDir dir("probe-bad");
    testsupport::spit(dir / "bad.json", "[{\"text\": \"a\"}, {");
    EXPECT_THROW(probe_file(dir / "bad.json"), ParseError);
    EXPECT_THROW(probe_file(dir / "missing.json"), IoError);
}

TEST(Probe, CountsRecordsNotTurns) {
    testsupport::TempDir dir("probe-turns");
    testsupport::spit(dir / "multi.jsonl",
                      R"({"conversations":[{"from":"human","value":"<image>\nq"},{"from":"gpt","value":"A dog."},)"
                      R"({"from":"human","value":"list"},{"from":"gpt","value":"1. dog\n2. ball"}]})"
                      "\n"
                      R"({"conversations":[{"from":"human","value":"<image>\nq"},{"from":"gpt","value":"Sunny."}]})"
                      "\n"
                      R"({"conversations":[{"from":"human","value":"only a question"}]})"
                      "\n");
    const ProbeStats s = probe_file(dir / "multi.jsonl");
    EXPECT_EQ(s.total, 2);
    EXPECT_EQ(s.listing, 1);
}
