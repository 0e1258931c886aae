#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "gradcheck.hpp"
#include "rare/fusion.hpp"
#include "test_util.hpp"

using namespace rare;
using namespace rare::testing;

namespace {

struct Setup {
  MhaParams params;
  SceneState scene;
  std::vector<ObjectEmbedding> objects;
};

Setup make_setup(std::mt19937_64& rng, int n, int heads = 4, bool residual = true) {
  Setup s{MhaParams(12, 10, 16, heads, residual), {random_vec(12, rng), 1}, {}};
  s.params.init(rng);
  for (int i = 0; i < n; ++i) s.objects.push_back({random_vec(10, rng, 2.0), {}});
  return s;
}

}  // namespace

TEST_CASE("single object gets the whole score") {
  std::mt19937_64 rng(1);
  auto s = make_setup(rng, 1);
  const auto out = fuse(s.scene, s.objects, s.params);
  REQUIRE(out.scores.size() == 1);
  CHECK(out.scores[0] == 1.0);
  CHECK(out.fused.size() == 16);
}

TEST_CASE("identical objects share the score evenly") {
  std::mt19937_64 rng(2);
  auto s = make_setup(rng, 3);
  s.objects[1] = s.objects[2] = s.objects[0];
  const auto out = fuse(s.scene, s.objects, s.params);
  for (int i = 0; i < 3; ++i) CHECK(out.scores[i] == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("scores are a probability vector and permute with the objects") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 20;
    auto s = make_setup(rng, n, 1 << (trial % 4));
    const auto out = fuse(s.scene, s.objects, s.params);
    CHECK(std::abs(out.scores.sum() - 1.0) <= 1e-6);
    CHECK(out.scores.minCoeff() >= 0.0);
    CHECK(out.scores.maxCoeff() <= 1.0);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<ObjectEmbedding> shuffled;
    for (int i : perm) shuffled.push_back(s.objects[i]);
    const auto other = fuse(s.scene, shuffled, s.params);
    CHECK((other.fused - out.fused).cwiseAbs().maxCoeff() <= 1e-6);
    for (int i = 0; i < n; ++i) CHECK(std::abs(other.scores[i] - out.scores[perm[i]]) <= 1e-6);
  }
}

TEST_CASE("a common shift of the key inputs keeps the score ranking") {
  std::mt19937_64 rng(4);
  auto s = make_setup(rng, 6);
  const auto before = fuse(s.scene, s.objects, s.params);
  const Vec shift = random_vec(10, rng, 3.0);
  for (auto& o : s.objects) o.values += shift;
  // values move too, so only the scores are compared
  const auto after = fuse(s.scene, s.objects, s.params);
  CHECK((after.scores - before.scores).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("empty object set") {
  std::mt19937_64 rng(5);
  auto s = make_setup(rng, 0);
  CHECK_ERROR_CODE(fuse(s.scene, s.objects, s.params), ErrorCode::kEmptyObjectSet);
  const auto out = fuse_empty(s.scene, s.params);
  CHECK(out.scores.size() == 0);
  CHECK(out.fused.size() == 16);
  CHECK(fuse_empty(s.scene, s.params).fused == out.fused);

  MhaParams zero(12, 10, 16, 4);
  CHECK(fuse_empty(SceneState::initial(12), zero).fused.isZero());
}

TEST_CASE("fusion shape errors") {
  std::mt19937_64 rng(6);
  auto s = make_setup(rng, 2);
  s.objects[1].values = Vec::Zero(9);
  CHECK_ERROR_CODE(fuse(s.scene, s.objects, s.params), ErrorCode::kInvalidShape);
  s = make_setup(rng, 2);
  CHECK_ERROR_CODE(fuse(SceneState::initial(11), s.objects, s.params), ErrorCode::kInvalidShape);
  CHECK_ERROR_CODE(MhaParams(4, 4, 10, 4), ErrorCode::kInvalidConfig);
}
