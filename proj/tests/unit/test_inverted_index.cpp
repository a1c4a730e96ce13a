#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "conceptscope/error.hpp"
#include "conceptscope/inverted_index.hpp"
#include "conceptscope/posting_list.hpp"
#include "synthetic.hpp"

using namespace conceptscope;
using Indices = std::vector<SampleIndex>;
using testsupport::TempDir;

namespace {

Indices as_vector(const PostingList& p) { return {p.begin(), p.end()}; }

std::string error_message(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const std::vector<std::string> kThreeCaptions{"a red fox", "the fox jumps", "red car"};

}  // namespace

TEST_CASE("posting list invariants") {
  CHECK_THROWS_AS(PostingList(Indices{1, 1}), Error);
  CHECK_THROWS_AS(PostingList(Indices{3, 2}), Error);
  CHECK(as_vector(PostingList::from_unsorted({5, 1, 5, 3})) == Indices{1, 3, 5});
  PostingList p;
  p.append(2);
  p.append(2);
  p.append(9);
  CHECK(as_vector(p) == Indices{2, 9});
  CHECK_THROWS_AS(p.append(4), Error);
  CHECK(p.contains(9));
  CHECK_FALSE(p.contains(3));
}

TEST_CASE("intersect") {
  PostingList a(Indices{1, 3, 5, 7}), b(Indices{3, 4, 5}), empty;
  CHECK(as_vector(intersect(a, b)) == Indices{3, 5});
  CHECK(intersect(a, empty).empty());
  CHECK(intersect(a, a) == a);
  std::vector<std::span<const SampleIndex>> none;
  CHECK_THROWS_AS(intersect(none), Error);
  std::vector<std::span<const SampleIndex>> one{a.indices()};
  CHECK(intersect(one) == a);
}

TEST_CASE("galloping intersection matches std::set_intersection") {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 300; ++round) {
    const std::size_t lists = 1 + rng() % 4;
    std::vector<PostingList> owned;
    for (std::size_t l = 0; l < lists; ++l) {
      const SampleIndex universe = 1 + static_cast<SampleIndex>(rng() % 5000);
      const std::size_t n = rng() % (l == 0 ? 20 : 3000);
      Indices v;
      for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<SampleIndex>(rng() % universe));
      owned.push_back(PostingList::from_unsorted(std::move(v)));
    }
    Indices expected = as_vector(owned[0]);
    for (std::size_t l = 1; l < lists; ++l) {
      Indices next;
      std::set_intersection(expected.begin(), expected.end(), owned[l].begin(), owned[l].end(),
                            std::back_inserter(next));
      expected = std::move(next);
    }
    std::vector<std::span<const SampleIndex>> spans;
    for (const auto& p : owned) spans.push_back(p.indices());
    std::shuffle(spans.begin(), spans.end(), rng);
    CHECK(as_vector(intersect(spans)) == expected);
  }
}

TEST_CASE("three-caption index") {
  auto index = build_text_index("toy", kThreeCaptions);
  CHECK(index.sample_count == 3);
  REQUIRE(index.find("fox") != nullptr);
  CHECK(as_vector(*index.find("fox")) == Indices{0, 1});
  CHECK(as_vector(*index.find("car")) == Indices{2});
  CHECK(index.find("red") == nullptr);
  CHECK(index.vocabulary.size() >= 2);

  auto fox = text_frequency(index, make_concept("fox"));
  CHECK(fox.count == 2);
  CHECK(as_vector(fox.hits) == Indices{0, 1});
  auto red_fox = text_frequency(index, make_concept("red fox"));
  CHECK(red_fox.count == 0);
  CHECK(red_fox.hits.empty());
  CHECK(text_frequency(index, make_concept("zyzzyva")).count == 0);
  CHECK(text_frequency(index, make_concept("Foxes")).count == 2);
}

TEST_CASE("repeated nouns post once per sample") {
  auto index = build_text_index("toy", std::vector<std::string>{"", "", "", "", "fox fox fox"});
  CHECK(as_vector(*index.find("fox")) == Indices{4});
  CHECK(index.total_postings() == 1);
}

TEST_CASE("empty corpus") {
  TempDir dir;
  auto m = open_corpus(testsupport::write_corpus(dir.path(), "empty", {}));
  auto index = build_text_index(m);
  CHECK(index.sample_count == 0);
  CHECK(index.vocabulary.empty());
  save_index(index, dir / "e.cfix");
  CHECK(load_index(dir / "e.cfix") == index);
}

TEST_CASE("manifest build equals in-memory build for any worker count and sharding") {
  TempDir dir;
  std::mt19937_64 rng(21);
  std::vector<std::string> captions;
  for (int i = 0; i < 3000; ++i) captions.push_back(testsupport::random_caption(rng));
  auto reference = build_text_index("rand", captions);
  for (std::size_t shards : {1u, 4u, 9u}) {
    auto m = open_corpus(testsupport::write_corpus(dir / ("s" + std::to_string(shards)), "rand", captions, shards, 1000));
    for (unsigned workers : {1u, 3u, 8u}) {
      IndexBuildOptions opts;
      opts.workers = workers;
      CHECK(build_text_index(m, opts) == reference);
    }
  }
}

TEST_CASE("annotations drive indexing") {
  TempDir dir;
  auto m = open_corpus(testsupport::write_corpus(dir.path(), "ann", {"morning run", "a red fox"}));
  TaggerAnnotations ann;
  ann.add(0, {{"morning", false}, {"run", true}});
  IndexBuildOptions opts;
  opts.annotations = &ann;
  auto index = build_text_index(m, opts);
  CHECK(as_vector(*index.find("run")) == Indices{0});
  CHECK(index.find("morning") == nullptr);
  CHECK(as_vector(*index.find("fox")) == Indices{1});

  ann.add(1, {{"a", false}});
  CHECK_THROWS_AS(build_text_index(m, opts), Error);
}

TEST_CASE("duplicate ids across shards fail the build") {
  TempDir dir;
  testsupport::write_text(dir / "a.jsonl", "{\"id\":5,\"caption\":\"x\"}\n");
  testsupport::write_text(dir / "b.jsonl", "{\"id\":5,\"caption\":\"y\"}\n");
  testsupport::write_text(dir / "manifest.json",
                          R"({"corpus_name":"x","format_version":1,"shards":["a.jsonl","b.jsonl"],"sample_count":2})");
  IndexBuildOptions opts;
  opts.workers = 2;
  auto msg = error_message([&] { build_text_index(open_corpus(dir / "manifest.json"), opts); });
  CHECK(msg.find("a.jsonl") != std::string::npos);
  CHECK(msg.find("b.jsonl") != std::string::npos);
}

TEST_CASE("exact phrase") {
  TempDir dir;
  auto m = open_corpus(testsupport::write_corpus(dir.path(), "p", {"barack obama speech", "obama barack", "Barack Obama"}));
  CHECK(exact_phrase_count(m, "barack obama") == 2);
  CHECK(exact_phrase_count(m, "obama barack") == 1);
  CHECK(exact_phrase_count(m, "barack obama speech") == 1);
  CHECK(exact_phrase_count(m, "michelle") == 0);
  CHECK_THROWS_AS(exact_phrase_count(m, "!!"), Error);
  std::vector<std::string> cap{"barack", "obama", "speech"}, phrase{"barack", "obama"};
  CHECK(contains_phrase(cap, phrase));
  CHECK_FALSE(contains_phrase(phrase, cap));
}

TEST_CASE("index persistence") {
  TempDir dir;
  auto index = build_text_index("toy", kThreeCaptions);
  save_index(index, dir / "i.cfix");
  auto back = load_index(dir / "i.cfix");
  CHECK(back == index);
  save_index(back, dir / "j.cfix");
  CHECK(testsupport::read_text(dir / "i.cfix") == testsupport::read_text(dir / "j.cfix"));

  auto bytes = testsupport::read_text(dir / "i.cfix");
  SUBCASE("checksum") {
    auto corrupt = bytes;
    corrupt[corrupt.size() / 2] ^= 0x40;
    testsupport::write_text(dir / "c.cfix", corrupt);
    CHECK(error_message([&] { load_index(dir / "c.cfix"); }).find("checksum mismatch") != std::string::npos);
  }
  SUBCASE("magic") {
    auto corrupt = bytes;
    corrupt[0] = 'X';
    testsupport::write_text(dir / "c.cfix", corrupt);
    CHECK(error_message([&] { load_index(dir / "c.cfix"); }).find("magic-number mismatch") != std::string::npos);
  }
  SUBCASE("truncated") {
    testsupport::write_text(dir / "c.cfix", bytes.substr(0, 7));
    CHECK(error_message([&] { load_index(dir / "c.cfix"); }).find("truncated") != std::string::npos);
  }
  SUBCASE("missing") {
    try {
      load_index(dir / "none.cfix");
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
  }
}

TEST_CASE("text frequency csv") {
  TempDir dir;
  auto index = build_text_index("toy", kThreeCaptions);
  std::vector<Concept> cs{make_concept("fox"), make_concept("red fox"), make_concept("car")};
  write_text_frequency_csv(dir / "f.csv", index, cs);
  CHECK(testsupport::read_text(dir / "f.csv") == "concept,text_count\nfox,2\nred fox,0\ncar,1\n");
}
