#include "doctest.h"

#include <algorithm>

#include "helpers.hpp"
#include "mweparse/tags.hpp"

using namespace mweparse;
using testutil::Rng;

namespace {

std::vector<MweInstance> sorted_by_start(std::vector<MweInstance> v) {
  std::sort(v.begin(), v.end(), [](const MweInstance& a, const MweInstance& b) {
    return a.positions.front() < b.positions.front();
  });
  return v;
}

bool conflict_free(const std::vector<MweInstance>& set) {
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      const auto& a = set[i];
      const auto& b = set[j];
      for (int p : a.positions)
        if (std::binary_search(b.positions.begin(), b.positions.end(), p)) return false;
      if (a.category == b.category && a.positions.front() <= b.positions.back() &&
          b.positions.front() <= a.positions.back())
        return false;
    }
  }
  return true;
}

std::vector<MweInstance> random_instance_set(Rng& rng, int n) {
  const char* cats[2] = {"VID", "LVC.full"};
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<MweInstance> set;
    int k = rng.below(4);
    for (int i = 0; i < k; ++i) {
      MweInstance inst;
      inst.category = cats[rng.below(2)];
      int size = 1 + rng.below(4);
      std::vector<int> pool(n);
      for (int p = 0; p < n; ++p) pool[p] = p + 1;
      rng.shuffle(pool);
      pool.resize(std::min<std::size_t>(size, pool.size()));
      std::sort(pool.begin(), pool.end());
      inst.positions = pool;
      set.push_back(inst);
    }
    if (conflict_free(set)) return set;
  }
  return {};
}

}  // namespace

TEST_CASE("gapped verbal idiom encodes as in the scheme") {
  TagSequence got = encode_tags(7, {{"VID", {3, 6, 7}}});
  TagSequence want{"O", "O", "B-VID", "o-VID", "o-VID", "I-VID", "I-VID"};
  CHECK(got == want);
  CHECK(decode_tags(want) == std::vector<MweInstance>{{"VID", {3, 6, 7}}});
}

TEST_CASE("no expressions means all O") {
  TagSequence got = encode_tags(4, {});
  CHECK(got == TagSequence{"O", "O", "O", "O"});
  CHECK(decode_tags(got).empty());
}

TEST_CASE("nested different-category expressions survive the round trip") {
  // outer VID {1,6} with LVC.full {3,4} inside the gap
  std::vector<MweInstance> set{{"VID", {1, 6}}, {"LVC.full", {3, 4}}};
  TagSequence tags = encode_tags(6, set);
  CHECK(tags == TagSequence{"B-VID", "o-VID", "B-LVC.full", "I-LVC.full", "o-VID",
                            "I-VID"});
  CHECK(sorted_by_start(decode_tags(tags)) == set);
}

TEST_CASE("crossing different-category expressions survive the round trip") {
  std::vector<MweInstance> set{{"VID", {1, 4}}, {"LVC.full", {3, 6}}};
  TagSequence tags = encode_tags(6, set);
  CHECK(tags == TagSequence{"B-VID", "o-VID", "B-LVC.full", "I-VID", "o-LVC.full",
                            "I-LVC.full"});
  CHECK(sorted_by_start(decode_tags(tags)) == set);
}

TEST_CASE("encoding conflicts are rejected with both instances named") {
  // same category, overlapping spans without shared tokens
  CHECK_THROWS_WITH_AS(encode_tags(6, {{"VID", {1, 4}}, {"VID", {2, 6}}}),
                       doctest::Contains("VID@[1,4]"), EncodingConflictError);
  // shared token across categories
  CHECK_THROWS_AS(encode_tags(6, {{"VID", {2, 3}}, {"LVC.full", {3, 4}}}),
                  EncodingConflictError);
  // adjacent same-category spans are fine
  CHECK_NOTHROW(encode_tags(6, {{"VID", {1, 2}}, {"VID", {3, 5}}}));
}

TEST_CASE("encode validates positions") {
  CHECK_THROWS_AS(encode_tags(3, {{"VID", {4}}}), IndexError);
  CHECK_THROWS_AS(encode_tags(3, {{"VID", {}}}), ContractError);
  CHECK_THROWS_AS(encode_tags(3, {{"VID", {2, 2}}}), ContractError);
}

TEST_CASE("decode repairs orphans and never throws") {
  CHECK(decode_tags({"I-VID", "O"}) == std::vector<MweInstance>{{"VID", {1}}});
  CHECK(decode_tags({"o-VID", "o-VID"}).empty());
  // O between members splits the expression
  CHECK(decode_tags({"B-VID", "O", "I-VID"}) ==
        std::vector<MweInstance>{{"VID", {1}}, {"VID", {3}}});
  // back-to-back restart
  CHECK(decode_tags({"B-VID", "I-VID", "B-VID", "I-VID"}) ==
        std::vector<MweInstance>{{"VID", {1, 2}}, {"VID", {3, 4}}});
  // garbage labels act like O
  CHECK(decode_tags({"B-VID", "???", "I-VID"}) ==
        std::vector<MweInstance>{{"VID", {1}}, {"VID", {3}}});
}

TEST_CASE("decode is total and stabilises after one encode, exhaustively") {
  const std::vector<std::string> alphabet{"O", "B-VID", "I-VID", "o-VID"};
  for (int len = 1; len <= 5; ++len) {
    std::vector<int> digits(len, 0);
    while (true) {
      TagSequence tags;
      for (int d : digits) tags.push_back(alphabet[d]);
      std::vector<MweInstance> decoded = decode_tags(tags);
      TagSequence reencoded = encode_tags(len, decoded);  // must not throw
      CHECK(decode_tags(reencoded) == decoded);
      CHECK(encode_tags(len, decode_tags(reencoded)) == reencoded);
      int i = 0;
      while (i < len && digits[i] == 3) digits[i++] = 0;
      if (i == len) break;
      ++digits[i];
    }
  }
}

TEST_CASE("decode(encode) identity on random conflict-free sets") {
  Rng rng(2024);
  int nonempty = 0;
  for (int rep = 0; rep < 500; ++rep) {
    int n = 4 + rng.below(9);  // up to 12
    std::vector<MweInstance> set = random_instance_set(rng, n);
    nonempty += !set.empty();
    TagSequence tags = encode_tags(n, set);
    CHECK(static_cast<int>(tags.size()) == n);
    CHECK(sorted_by_start(decode_tags(tags)) == sorted_by_start(set));
  }
  CHECK(nonempty > 200);  // the generator is not degenerate
}

TEST_CASE("label vocabulary construction") {
  Corpus vid_only = parse_cupt_string(
      "1\tkick\tkick\tVERB\t_\t_\t0\t_\t_\t_\t1:VID\n"
      "2\tbucket\tbucket\tNOUN\t_\t_\t1\t_\t_\t_\t1\n\n");
  LabelVocabulary v = build_label_vocab(vid_only);
  CHECK(v.labels() == std::vector<std::string>{"O", "B-VID", "o-VID", "I-VID"});
  CHECK(v.index_of("O") == 0);
  CHECK(v.index_of("I-VID") == 3);
  CHECK(v.index_of("B-IRV") == -1);
  CHECK(v.label_of(1) == "B-VID");
  CHECK_THROWS_AS(v.label_of(9), IndexError);

  CHECK(build_label_vocab({}).labels() == std::vector<std::string>{"O"});

  Corpus two = parse_cupt_string(
      "1\tkick\tkick\tVERB\t_\t_\t0\t_\t_\t_\t1:VID\n"
      "2\tbucket\tbucket\tNOUN\t_\t_\t1\t_\t_\t_\t1\n\n"
      "1\tmade\tmake\tVERB\t_\t_\t0\t_\t_\t_\t1:LVC.full\n"
      "2\tcall\tcall\tNOUN\t_\t_\t1\t_\t_\t_\t1\n\n");
  LabelVocabulary v2 = build_label_vocab(two);
  CHECK(v2.labels() == std::vector<std::string>{"O", "B-VID", "o-VID", "I-VID",
                                                "B-LVC.full", "o-LVC.full", "I-LVC.full"});
}

TEST_CASE("conflict dropping keeps the longer expression") {
  int dropped = 0;
  auto kept = drop_encoding_conflicts(
      {{"VID", {1, 2}}, {"VID", {2, 3, 4}}, {"LVC.full", {6, 7}}}, &dropped);
  CHECK(dropped == 1);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0] == MweInstance{"VID", {2, 3, 4}});
  CHECK(kept[1] == MweInstance{"LVC.full", {6, 7}});
  CHECK_NOTHROW(encode_tags(7, kept));
}
