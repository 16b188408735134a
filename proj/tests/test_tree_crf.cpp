#include "doctest.h"

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "mweparse/tree_crf.hpp"

using namespace mweparse;
using testutil::Rng;

namespace {

ArcScores random_scores(Rng& rng, int n, double lo = -2.0, double hi = 2.0) {
  ArcScores s = ArcScores::zeros(n);
  for (int h = 0; h <= n; ++h)
    for (int d = 1; d <= n; ++d)
      if (h != d) s.at(h, d) = rng.uniform(lo, hi);
  return s;
}

double brute_log_z(const ArcScores& s, Regime regime) {
  double mx = -1e300;
  std::vector<double> vals;
  for (const DepTree& t : enumerate_trees(s.n, regime)) {
    vals.push_back(tree_score(s, t));
    mx = std::max(mx, vals.back());
  }
  double acc = 0;
  for (double v : vals) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

std::vector<double> brute_marginals(const ArcScores& s, Regime regime) {
  const double lz = brute_log_z(s, regime);
  std::vector<double> mu(static_cast<std::size_t>(s.n + 1) * s.n, 0.0);
  for (const DepTree& t : enumerate_trees(s.n, regime)) {
    double p = std::exp(tree_score(s, t) - lz);
    for (int d = 1; d <= s.n; ++d)
      mu[static_cast<std::size_t>(t.heads[d - 1]) * s.n + (d - 1)] += p;
  }
  return mu;
}

DepTree brute_map(const ArcScores& s, Regime regime) {
  DepTree best;
  double best_score = -1e300;
  for (const DepTree& t : enumerate_trees(s.n, regime)) {
    double v = tree_score(s, t);
    if (v > best_score) best_score = v, best = t;
  }
  return best;
}

}  // namespace

TEST_CASE("tree counts for small n") {
  CHECK(enumerate_trees(1, Regime::NonProjective).size() == 1);
  CHECK(enumerate_trees(2, Regime::NonProjective).size() == 2);
  CHECK(enumerate_trees(2, Regime::Projective).size() == 2);
  CHECK(enumerate_trees(3, Regime::NonProjective).size() == 9);
  CHECK(enumerate_trees(3, Regime::Projective).size() == 7);
  // single-root arborescences on n sentence nodes: n^(n-1)
  CHECK(enumerate_trees(4, Regime::NonProjective).size() == 64);
  CHECK(enumerate_trees(5, Regime::NonProjective).size() == 625);
  CHECK_THROWS_AS(enumerate_trees(8, Regime::Projective), ContractError);
  CHECK_THROWS_AS(enumerate_trees(0, Regime::Projective), ContractError);
}

TEST_CASE("tree validity and projectivity") {
  CHECK(is_valid_tree({0}));
  CHECK(is_valid_tree({0, 1, 2}));
  CHECK_FALSE(is_valid_tree({0, 0, 1}));  // two root children
  CHECK_FALSE(is_valid_tree({2, 1, 3}));  // no root
  CHECK_FALSE(is_valid_tree({}));
  CHECK_FALSE(is_valid_tree({0, 3, 2}));  // 2 and 3 form a cycle
  CHECK(is_projective({2, 0, 2}));
  CHECK_FALSE(is_projective({3, 0, 2}));  // arc (3,1) crosses arc (0,2)
}

TEST_CASE("log_partition closed forms") {
  ArcScores s1 = ArcScores::zeros(1);
  s1.at(0, 1) = 1.7;
  CHECK(log_partition(s1, Regime::Projective) == doctest::Approx(1.7).epsilon(1e-15));
  CHECK(log_partition(s1, Regime::NonProjective) == doctest::Approx(1.7).epsilon(1e-15));

  ArcScores s2 = ArcScores::zeros(2);
  CHECK(log_partition(s2, Regime::Projective) == doctest::Approx(std::log(2.0)));
  CHECK(log_partition(s2, Regime::NonProjective) == doctest::Approx(std::log(2.0)));

  ArcScores s3 = ArcScores::zeros(3);
  CHECK(log_partition(s3, Regime::NonProjective) == doctest::Approx(std::log(9.0)));
  CHECK(log_partition(s3, Regime::Projective) == doctest::Approx(std::log(7.0)));
}

TEST_CASE("log_partition error paths") {
  CHECK_THROWS_AS(log_partition(ArcScores::zeros(0), Regime::Projective),
                  DegenerateInputError);
  ArcScores bad = ArcScores::zeros(2);
  bad.at(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(log_partition(bad, Regime::NonProjective), ContractError);
}

TEST_CASE("log_partition matches enumeration for random scores") {
  Rng rng(42);
  for (int n = 1; n <= 5; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      ArcScores s = random_scores(rng, n);
      for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
        CHECK(std::fabs(log_partition(s, regime) - brute_log_z(s, regime)) < 1e-9);
      }
    }
  }
}

TEST_CASE("projective logZ never exceeds non-projective logZ") {
  Rng rng(43);
  for (int rep = 0; rep < 30; ++rep) {
    ArcScores s = random_scores(rng, 2 + rep % 4);
    CHECK(log_partition(s, Regime::Projective) <=
          log_partition(s, Regime::NonProjective) + 1e-12);
  }
}

TEST_CASE("tree probabilities sum to one") {
  Rng rng(44);
  for (int n = 2; n <= 5; ++n) {
    ArcScores s = random_scores(rng, n);
    for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
      double lz = log_partition(s, regime);
      double total = 0;
      for (const DepTree& t : enumerate_trees(n, regime))
        total += std::exp(tree_score(s, t) - lz);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("marginals closed forms") {
  ArcScores s1 = ArcScores::zeros(1);
  s1.at(0, 1) = -0.3;
  CHECK(marginals(s1, Regime::Projective)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(marginals(s1, Regime::NonProjective)[0] == doctest::Approx(1.0).epsilon(1e-12));

  ArcScores s2 = ArcScores::zeros(2);
  for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
    std::vector<double> mu = marginals(s2, regime);
    // feasible arcs (0,1), (0,2), (1,2), (2,1) all have probability 0.5
    CHECK(mu[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mu[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mu[1 * 2 + 1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mu[2 * 2 + 0] == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("marginals match enumeration and columns sum to one") {
  Rng rng(45);
  for (int n = 1; n <= 5; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      ArcScores s = random_scores(rng, n);
      for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
        std::vector<double> mu = marginals(s, regime);
        std::vector<double> bf = brute_marginals(s, regime);
        for (std::size_t i = 0; i < mu.size(); ++i) CHECK(std::fabs(mu[i] - bf[i]) < 1e-8);
        for (int d = 1; d <= n; ++d) {
          double col = 0;
          for (int h = 0; h <= n; ++h)
            if (h != d) col += mu[static_cast<std::size_t>(h) * n + (d - 1)];
          CHECK(col == doctest::Approx(1.0).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("map_tree trivial cases") {
  ArcScores s1 = ArcScores::zeros(1);
  CHECK(map_tree(s1, Regime::Projective).heads == std::vector<int>{0});
  CHECK(map_tree(s1, Regime::NonProjective).heads == std::vector<int>{0});

  ArcScores s2 = ArcScores::zeros(2);
  s2.at(0, 1) = 5.0;  // dominant arc forces root->1->2
  CHECK(map_tree(s2, Regime::Projective).heads == std::vector<int>{0, 1});
  CHECK(map_tree(s2, Regime::NonProjective).heads == std::vector<int>{0, 1});
}

TEST_CASE("map_tree equals brute-force argmax") {
  Rng rng(46);
  for (int n = 1; n <= 5; ++n) {
    for (int rep = 0; rep < 40; ++rep) {
      ArcScores s = random_scores(rng, n);
      for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
        DepTree got = map_tree(s, regime);
        DepTree want = brute_map(s, regime);
        CHECK(is_valid_tree(got.heads));
        if (regime == Regime::Projective) CHECK(is_projective(got.heads));
        CHECK(tree_score(s, got) == doctest::Approx(tree_score(s, want)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("map_tree at n=7 dominates every enumerated tree") {
  Rng rng(47);
  for (int rep = 0; rep < 4; ++rep) {
    ArcScores s = random_scores(rng, 7);
    for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
      DepTree got = map_tree(s, regime);
      double best = tree_score(s, got);
      for (const DepTree& t : enumerate_trees(7, regime))
        CHECK(best >= tree_score(s, t) - 1e-9);
    }
  }
}

TEST_CASE("nll: single tree means zero loss and zero gradient") {
  ArcScores s1 = ArcScores::zeros(1);
  s1.at(0, 1) = 2.2;
  for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
    NllResult r = tree_nll(s1, DepTree{{0}}, regime);
    CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-15));
    for (double g : r.grad) CHECK(std::fabs(g) < 1e-15);
  }
}

TEST_CASE("nll two-token uniform case") {
  ArcScores s2 = ArcScores::zeros(2);
  DepTree gold{{0, 1}};  // root->1->2
  for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
    NllResult r = tree_nll(s2, gold, regime);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r.grad[0] == doctest::Approx(-0.5).epsilon(1e-12));  // mu(0,1) - 1
  }
}

TEST_CASE("nll gradient equals finite differences") {
  Rng rng(48);
  for (int n = 2; n <= 4; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      ArcScores s = random_scores(rng, n);
      for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
        auto trees = enumerate_trees(n, regime);
        DepTree gold = trees[rng.below(static_cast<int>(trees.size()))];
        NllResult r = tree_nll(s, gold, regime);
        CHECK(r.loss >= -1e-12);
        const double h = 1e-6;
        for (int head = 0; head <= n; ++head) {
          for (int d = 1; d <= n; ++d) {
            if (head == d) continue;
            double saved = s.at(head, d);
            s.at(head, d) = saved + h;
            double up = tree_nll(s, gold, regime).loss;
            s.at(head, d) = saved - h;
            double down = tree_nll(s, gold, regime).loss;
            s.at(head, d) = saved;
            double fd = (up - down) / (2 * h);
            CHECK(std::fabs(r.grad[static_cast<std::size_t>(head) * n + (d - 1)] - fd) <
                  1e-6);
          }
        }
      }
    }
  }
}

TEST_CASE("nll rejects bad gold") {
  ArcScores s = ArcScores::zeros(3);
  CHECK_THROWS_AS(tree_nll(s, DepTree{{0, 0, 1}}, Regime::NonProjective), ContractError);
  DepTree nonproj{{3, 0, 2}};
  REQUIRE(is_valid_tree(nonproj.heads));
  REQUIRE_FALSE(is_projective(nonproj.heads));
  CHECK_THROWS_AS(tree_nll(s, nonproj, Regime::Projective), RegimeMismatchError);
  CHECK_NOTHROW(tree_nll(s, nonproj, Regime::NonProjective));
}

TEST_CASE("tree_nll_op plugs into the tape") {
  Rng rng(49);
  Tensor scores = testutil::random_tensor(rng, 4, 3, true);
  DepTree gold{{0, 1, 2}};
  for (Regime regime : {Regime::Projective, Regime::NonProjective}) {
    double err = testutil::grad_check(
        {scores}, [&] { return tree_nll_op(scores, gold, regime); }, 1e-6);
    CHECK(err < 1e-6);
  }
}
