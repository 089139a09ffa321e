#include <gtest/gtest.h>

#include <algorithm>

#include <json.hpp>

#include "somlist/datamix.hpp"
#include "somlist/errors.hpp"
#include "somlist/rng.hpp"
#include "support.hpp"

using namespace som;
using testsupport::fixtures;

namespace {

std::string rec(const std::string& id, const std::string& image, const std::string& answer) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["image"] = image;
    j["conversations"] = {{{"from", "human"}, {"value", "<image>\nDescribe."}}, {{"from", "gpt"}, {"value", answer}}};
    return j.dump() + "\n";
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string l;
    while (std::getline(in, l))
        if (!l.empty()) out.push_back(l);
    return out;
}

struct Sources {
    testsupport::TempDir dir{"mix"};
    Sources() {
        testsupport::spit(dir / "a.jsonl", rec("a1", "x.png", "A cat.") + rec("a2", "y.png", "1. cat, 2. dog."));
        testsupport::spit(dir / "b.jsonl", rec("b1", "z.png", "A dog."));
    }
    MixRecipe recipe(std::uint64_t seed) const {
        return MixRecipe{{{"A", dir / "a.jsonl", std::nullopt}, {"B", dir / "b.jsonl", std::nullopt}}, seed,
                         OutputFormat::jsonl};
    }
};

}  // namespace

TEST(Mix, SmallRecipeIsDeterministicPermutation) {
    const Sources s;
    const MixResult r1 = mix(s.recipe(7));
    const MixResult r2 = mix(s.recipe(7));
    EXPECT_EQ(r1.output, r2.output);
    EXPECT_EQ(r1.manifest.content_sha256, r2.manifest.content_sha256);
    const auto got = lines(r1.output);
    ASSERT_EQ(got.size(), 3u);

    // Independent replay of the permutation over the concatenated records.
    std::vector<std::string> expected{lines(testsupport::slurp(s.dir / "a.jsonl"))[0],
                                      lines(testsupport::slurp(s.dir / "a.jsonl"))[1],
                                      lines(testsupport::slurp(s.dir / "b.jsonl"))[0]};
    for (auto& e : expected) e = nlohmann::ordered_json::parse(e).dump();
    seeded_shuffle(std::span<std::string>(expected), 7);
    EXPECT_EQ(got, expected);

    EXPECT_EQ(r1.manifest.total, 3);
    ASSERT_EQ(r1.manifest.sources.size(), 2u);
    EXPECT_EQ(r1.manifest.sources[0].taken, 2);
    EXPECT_EQ(r1.manifest.sources[1].available, 1);
}

TEST(Mix, TakeZeroAndOverflow) {
    const Sources s;
    MixRecipe r = s.recipe(1);
    r.sources[0].take = 0;
    const MixResult m = mix(r);
    EXPECT_EQ(m.manifest.total, 1);
    EXPECT_EQ(lines(m.output).size(), 1u);
    r.sources[0].take = 3;
    EXPECT_THROW(mix(r), RecipeError);
}

TEST(Mix, RecipeValidation) {
    const Sources s;
    EXPECT_THROW(recipe_from_json(R"({"seed":1,"sources":[{"label":"A","path":"a.jsonl"},{"label":"A","path":"b.jsonl"}]})",
                                  s.dir.path()),
                 RecipeError);
    EXPECT_THROW(recipe_from_json(R"({"seed":1,"sources":[{"label":"A","path":"a.jsonl","take":-1}]})", s.dir.path()),
                 RecipeError);
    EXPECT_THROW(recipe_from_json(R"({"seed":1,"format":"csv","sources":[]})", s.dir.path()), RecipeError);
    EXPECT_THROW(recipe_from_json(R"({"seed":1,)", s.dir.path()), ParseError);
    const MixRecipe ok = recipe_from_json(R"({"seed":5,"format":"json","sources":[{"label":"A","path":"a.jsonl"}]})",
                                          s.dir.path());
    EXPECT_EQ(ok.shuffle_seed, 5u);
    EXPECT_EQ(ok.format, OutputFormat::json_array);
    EXPECT_EQ(ok.sources[0].path, s.dir / "a.jsonl");
}

TEST(Mix, UnreadableOrInvalidSource) {
    const Sources s;
    MixRecipe r = s.recipe(1);
    r.sources[1].path = s.dir / "missing.jsonl";
    EXPECT_THROW(mix(r), IoError);
    testsupport::spit(s.dir / "bad.jsonl", R"({"id":"q","image":"a.png","conversations":[{"from":"gpt","value":"x"}]})" "\n");
    r.sources[1].path = s.dir / "bad.jsonl";
    EXPECT_THROW(mix(r), DataError);
}

TEST(Mix, ConservationAndOrderFreeDigest) {
    const MixRecipe base = load_recipe(fixtures() / "mix" / "recipe.json");
    const MixResult a = mix(base);
    MixRecipe other = base;
    other.shuffle_seed = base.shuffle_seed + 1;
    const MixResult b = mix(other);
    EXPECT_EQ(a.manifest.total, 695);
    EXPECT_NE(a.manifest.content_sha256, b.manifest.content_sha256);
    EXPECT_EQ(a.manifest.sorted_records_sha256, b.manifest.sorted_records_sha256);

    auto la = lines(a.output), lb = lines(b.output);
    std::sort(la.begin(), la.end());
    std::sort(lb.begin(), lb.end());
    EXPECT_EQ(la, lb);

    std::int64_t sum = 0;
    for (const auto& src : a.manifest.sources) sum += src.taken;
    EXPECT_EQ(sum, a.manifest.total);
}

TEST(Mix, JsonArrayFormatAndManifestFile) {
    const Sources s;
    MixRecipe r = s.recipe(3);
    r.format = OutputFormat::json_array;
    const auto out = s.dir / "mixed.json";
    const MixManifest m = mix_to_file(r, out);
    const auto arr = nlohmann::json::parse(testsupport::slurp(out));
    ASSERT_TRUE(arr.is_array());
    EXPECT_EQ(arr.size(), 3u);
    const auto man = nlohmann::json::parse(testsupport::slurp(s.dir / "mixed.json.manifest.json"));
    EXPECT_EQ(man["content_sha256"], m.content_sha256);
    EXPECT_EQ(man["total"], 3);
    EXPECT_EQ(man["format"], "json");
}

TEST(Stats, HandCountedFile) {
    const Sources s;
    // Two records from a.jsonl: 4 turns, 2 images, one listing answer.
    EXPECT_EQ(dataset_stats(s.dir / "a.jsonl"), (DatasetStats{2, 4, 2, 1}));
    testsupport::spit(s.dir / "dup.jsonl", rec("d1", "x.png", "ok") + rec("d2", "x.png", "ok") + rec("d3", "", "ok"));
    EXPECT_EQ(dataset_stats(s.dir / "dup.jsonl"), (DatasetStats{3, 6, 1, 0}));
    testsupport::spit(s.dir / "empty.jsonl", "");
    EXPECT_EQ(dataset_stats(s.dir / "empty.jsonl"), (DatasetStats{}));
}

TEST(Stats, MixedOutputSumsItsSources) {
    testsupport::TempDir dir("mixstats");
    const MixRecipe r = load_recipe(fixtures() / "mix" / "recipe.json");
    mix_to_file(r, dir / "out.jsonl");
    const DatasetStats total = dataset_stats(dir / "out.jsonl");
    DatasetStats sum;
    for (const auto& src : r.sources) {
        const DatasetStats one = dataset_stats(src.path);
        sum.records += one.records;
        sum.turns += one.turns;
        sum.images += one.images;
        sum.listing_turns += one.listing_turns;
    }
    EXPECT_EQ(total, sum);
}
