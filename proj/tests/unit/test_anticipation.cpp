#include <doctest.h>

#include "gradcheck.hpp"
#include "rare/anticipation.hpp"
#include "test_util.hpp"

using namespace rare;
using namespace rare::testing;

TEST_CASE("fresh queue reads as zeros") {
  FeatureQueue q(10, 3);
  CHECK(q.fill_count() == 0);
  CHECK(q.concatenated().size() == 30);
  CHECK(q.concatenated().isZero());
  q.push(Vec::Constant(3, 2.0));
  CHECK(q.fill_count() == 1);
  CHECK(q.entry(0) == Vec::Constant(3, 2.0));
  for (int s = 1; s < 10; ++s) CHECK(q.entry(s).isZero());
}

TEST_CASE("queue keeps the newest entries first and evicts the oldest") {
  FeatureQueue q(10, 2);
  for (int i = 1; i <= 11; ++i) q.push(Vec::Constant(2, i));
  CHECK(q.fill_count() == 10);
  for (int s = 0; s < 10; ++s) CHECK(q.entry(s)[0] == 11 - s);
  const Vec all = q.concatenated();
  CHECK(all[0] == 11);
  CHECK(all[19] == 2);
}

TEST_CASE("risk score lies in [0, 1] and carries the frame index") {
  std::mt19937_64 rng(21);
  ClassifierParams p(40, 8);
  p.init(rng);
  FeatureQueue q(10, 4);
  for (int t = 0; t < 30; ++t) {
    const auto r = push_and_classify(q, random_vec(4, rng, 1.0 + t), p, t);
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
    CHECK(r.frame_index == t);
  }
}

TEST_CASE("zero classifier gives one half") {
  ClassifierParams p(20, 5);
  FeatureQueue q(10, 2);
  CHECK(push_and_classify(q, Vec::Ones(2), p, 0).value == 0.5);
}

TEST_CASE("dimension mismatch") {
  ClassifierParams p(20, 5);
  FeatureQueue q(10, 2);
  CHECK_ERROR_CODE(push_and_classify(q, Vec::Ones(3), p, 0), ErrorCode::kInvalidShape);
  CHECK(q.fill_count() == 0);
}
