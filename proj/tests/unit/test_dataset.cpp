#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "memesent/dataset.hpp"
#include "memesent/random.hpp"
#include "support/test_support.hpp"

#include <algorithm>
#include <string>
#include <vector>

using namespace memesent;
using namespace memesent::dataset;
using memesent::testing::test_data;

namespace {

const char* kSchema = R"({
  "format": "csv",
  "labels": {
    "humor": {"funny": "funny", "not_funny": "not_funny"},
    "sarcasm": {"general": "sarcastic", "not_sarcastic": "not_sarcastic"},
    "motivation": {"motivational": "motivational", "not_motivational": "not_motivational"},
    "sentiment": {"positive": "positive", "neutral": "neutral", "negative": "negative"}
  }
})";

const char* kHeader = "image_name,text,humour,sarcasm,motivational,overall_sentiment\n";

std::vector<MemeRecord> random_records(Rng& rng, std::size_t n) {
  std::vector<MemeRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].id = "r" + std::to_string(i);
    for (Task t : kAllTasks) out[i].labels.set(t, static_cast<int>(rng.below(static_cast<std::uint64_t>(task_arity(t)))));
  }
  return out;
}

std::vector<std::string> ids(const std::vector<MemeRecord>& r) {
  std::vector<std::string> out;
  for (const auto& x : r) out.push_back(x.id);
  return out;
}

}  // namespace

TEST_CASE("csv rows map through the schema label table") {
  const auto schema = Schema::from_json_text(kSchema);
  const std::string csv = std::string(kHeader) +
                          "a.jpg,\"hi, there\",funny,general,motivational,neutral\n"
                          "b.jpg,,not_funny,not_sarcastic,not_motivational,negative\n";
  const auto recs = parse_dataset(csv, Schema::Format::csv, schema);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].id == "a.jpg");
  CHECK(recs[0].text == "hi, there");
  CHECK(recs[0].labels.sarcasm == Sarcasm::sarcastic);
  CHECK(recs[0].labels.sentiment == Sentiment::neutral);
  CHECK(recs[1].text.empty());
  CHECK(recs[1].labels.humor == Humor::not_funny);
}

TEST_CASE("empty file with a valid header gives no records") {
  const auto schema = Schema::from_json_text(kSchema);
  CHECK(parse_dataset(kHeader, Schema::Format::csv, schema).empty());
}

TEST_CASE("unmapped label is a row error carrying the row index") {
  const auto schema = Schema::from_json_text(kSchema);
  const std::string csv = std::string(kHeader) + "a,x,funny,general,motivational,neutral\n" +
                          "b,x,funny,general,motivational,neutral\n" + "c,x,maybe_funny,general,motivational,neutral\n";
  try {
    parse_dataset(csv, Schema::Format::csv, schema);
    FAIL("expected a row error");
  } catch (const RowError& e) {
    CHECK(e.row() == 2);
    CHECK(std::string(e.what()).find("maybe_funny") != std::string::npos);
  }
}

TEST_CASE("missing column is a schema error naming it") {
  const auto schema = Schema::from_json_text(kSchema);
  const std::string csv = "image_name,text,humour,sarcasm,motivational\na,x,funny,general,motivational\n";
  try {
    parse_dataset(csv, Schema::Format::csv, schema);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("overall_sentiment") != std::string::npos);
  }
}

TEST_CASE("duplicate ids are rejected") {
  const auto schema = Schema::from_json_text(kSchema);
  const std::string csv = std::string(kHeader) + "a,x,funny,general,motivational,neutral\n" +
                          "a,y,funny,general,motivational,neutral\n";
  CHECK_THROWS_AS(parse_dataset(csv, Schema::Format::csv, schema), RowError);
}

TEST_CASE("jsonl input uses the same schema") {
  auto schema = Schema::from_json_text(kSchema);
  const std::string jl =
      R"({"image_name":"a","text":"t","humour":"funny","sarcasm":"general","motivational":"motivational","overall_sentiment":"positive"})"
      "\n";
  const auto recs = parse_dataset(jl, Schema::Format::jsonl, schema);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].labels.sentiment == Sentiment::positive);
}

TEST_CASE("schema rejects class names outside the task") {
  CHECK_THROWS_AS(Schema::from_json_text(R"({"labels":{"humor":{"x":"sarcastic"}}})"), SchemaError);
  CHECK_THROWS_AS(Schema::from_json_text("not json"), SchemaError);
}

TEST_CASE("fixture distributions match the annotation counts") {
  const auto schema = Schema::from_file(test_data("table1/schema.json"));
  const auto recs = load_dataset(test_data("table1/memotion_fixture.csv"), schema);
  REQUIRE(recs.size() == 6992);
  const auto sarcasm = class_distribution(recs, Task::sarcasm);
  CHECK(sarcasm.count("sarcastic") == 5341);
  CHECK(sarcasm.count("not_sarcastic") == 1651);
  const auto motivation = class_distribution(recs, Task::motivation);
  CHECK(motivation.count("motivational") == 2467);
  CHECK(motivation.count("not_motivational") == 4525);
  for (Task t : kAllTasks) CHECK(class_distribution(recs, t).total() == recs.size());
}

TEST_CASE("class distribution of a constructed balance") {
  std::vector<MemeRecord> recs(10);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].id = std::to_string(i);
    recs[i].labels.humor = i < 5 ? Humor::funny : Humor::not_funny;
  }
  const auto d = class_distribution(recs, Task::humor);
  CHECK(d.count("funny") == 5);
  CHECK(d.count("not_funny") == 5);
  CHECK_THROWS_AS(class_distribution({}, Task::humor), InputError);
}

TEST_CASE("split sizes use the floor of ratio times n") {
  CHECK(train_size(6992, 0.8) == 5593);
  CHECK(6992 - train_size(6992, 0.8) == 1399);
  Rng rng(1);
  const auto recs = random_records(rng, 10);
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const auto s = split(recs, 0.8, seed);
    CHECK(s.train.size() == 8);
    CHECK(s.test.size() == 2);
  }
  CHECK_THROWS_AS(split(recs, 0.0, 1), InputError);
  CHECK_THROWS_AS(split(recs, 1.0, 1), InputError);
}

TEST_CASE("property: split is a deterministic partition of the input ids") {
  Rng gen(20240101);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + gen.below(300);
    const double ratio = 0.05 + 0.9 * gen.uniform();
    const std::uint64_t seed = gen.next();
    const auto recs = random_records(gen, n);
    const auto a = split(recs, ratio, seed);
    const auto b = split(recs, ratio, seed);
    CHECK(ids(a.train) == ids(b.train));
    CHECK(ids(a.test) == ids(b.test));
    auto all = ids(a.train);
    const auto test = ids(a.test);
    all.insert(all.end(), test.begin(), test.end());
    std::sort(all.begin(), all.end());
    auto expect = ids(recs);
    std::sort(expect.begin(), expect.end());
    CHECK(all == expect);
    CHECK(a.train.size() == train_size(n, ratio));
  }
}

TEST_CASE("property: distribution totals equal the record count") {
  Rng gen(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto recs = random_records(gen, 1 + gen.below(200));
    for (Task t : kAllTasks) {
      const auto d = class_distribution(recs, t);
      CHECK(d.total() == recs.size());
      CHECK(d.counts.size() == static_cast<std::size_t>(task_arity(t)));
    }
  }
}
