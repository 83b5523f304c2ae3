// Copyright 2026 The cuesep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include "cuesep/backend.hpp"
#include "gradcheck.hpp"

namespace cuesep {
namespace {

using testing::check_gradients;
using testing::random_tensor;

TEST(CrossAttention, RowsSumToOneAndShapesKept) {
  ParamStore store;
  StreamCrossAttention att(nn::Builder(store, 1), 4);
  std::mt19937_64 rng(1);
  Graph g(false);
  DualStream s{g.constant(random_tensor({4, 3, 6}, rng)), g.constant(random_tensor({4, 3, 6}, rng))};
  Var a;
  DualStream out = att(g, s, &a);
  EXPECT_EQ(out.target.shape(), (Shape{4, 3, 6}));
  EXPECT_EQ(out.interference.shape(), (Shape{4, 3, 6}));
  ASSERT_EQ(a.shape(), (Shape{6, 6}));
  for (int q = 0; q < 6; ++q) {
    double sum = 0.0;
    for (int k = 0; k < 6; ++k) sum += a.value().at(q, k);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(CrossAttention, ZeroOutputsIsIdentity) {
  ParamStore store;
  StreamCrossAttention att(nn::Builder(store, 2), 4);
  att.zero_outputs();
  std::mt19937_64 rng(2);
  Tensor t = random_tensor({4, 3, 6}, rng), i = random_tensor({4, 3, 6}, rng);
  Graph g(false);
  DualStream out = att(g, {g.constant(t), g.constant(i)});
  EXPECT_EQ(out.target.value().storage(), t.storage());
  EXPECT_EQ(out.interference.value().storage(), i.storage());
}

TEST(CrossAttention, SubtractsAndAddsTheAttendedSummary) {
  ParamStore store;
  StreamCrossAttention att(nn::Builder(store, 3), 2);
  std::mt19937_64 rng(3);
  Tensor t = random_tensor({2, 2, 3}, rng), in = random_tensor({2, 2, 3}, rng);
  Graph g(false);
  Var a;
  DualStream out = att(g, {g.constant(t), g.constant(in)}, &a);
  Tensor summary({2, 2, 3});
  for (int h = 0; h < 2; ++h)
    for (int k = 0; k < 2; ++k)
      for (int q = 0; q < 3; ++q)
        for (int s = 0; s < 3; ++s) summary.at(h, k, q) += a.value().at(q, s) * in.at(h, k, s);
  auto proj = [&](const char* name, int o, int k, int q) {
    const Tensor& w = store.find(std::string(name) + ".weight")->value;
    double v = store.find(std::string(name) + ".bias")->value[o];
    for (int h = 0; h < 2; ++h) v += w.at(o, h) * summary.at(h, k, q);
    return v;
  };
  for (int o = 0; o < 2; ++o)
    for (int k = 0; k < 2; ++k)
      for (int q = 0; q < 3; ++q) {
        EXPECT_NEAR(out.target.value().at(o, k, q), t.at(o, k, q) - proj("to_target", o, k, q), 1e-12);
        EXPECT_NEAR(out.interference.value().at(o, k, q),
                    in.at(o, k, q) + proj("to_interference", o, k, q), 1e-12);
      }
}

TEST(CrossAttention, Gradients) {
  ParamStore store;
  StreamCrossAttention att(nn::Builder(store, 4), 3);
  std::mt19937_64 rng(4);
  auto r = check_gradients(
      [&](Graph& g, const std::vector<Var>& x) {
        DualStream o = att(g, {x[0], x[1]});
        return ops::concat({o.target, o.interference}, 0);
      },
      {random_tensor({3, 2, 4}, rng), random_tensor({3, 2, 4}, rng)}, &store);
  EXPECT_LT(r.worst(), 1e-4) << r.worst_name();
}

TEST(Backend, MaskShapeAndNonnegativity) {
  ParamStore store;
  BackendConfig cfg{2, 4, 3, 6};
  Backend be(nn::Builder(store, 5), cfg);
  std::mt19937_64 rng(5);
  Graph g(false);
  Var mask = be.estimate_mask(g, g.constant(random_tensor({4, 8, 5}, rng, 3.0)));
  ASSERT_EQ(mask.shape(), (Shape{6, 8, 5}));
  bool any_positive = false;
  for (double v : mask.value().values()) {
    ASSERT_GE(v, 0.0);
    any_positive = any_positive || v > 0.0;
  }
  EXPECT_TRUE(any_positive);
}

TEST(Backend, ParameterCountGrowsByWholeBlocks) {
  auto count = [](int blocks) {
    ParamStore store;
    Backend be(nn::Builder(store, 6), BackendConfig{blocks, 8, 4, 10});
    return store.num_scalars();
  };
  ParamStore one;
  Backend be(nn::Builder(one, 6), BackendConfig{1, 8, 4, 10});
  const std::size_t block = one.num_scalars("block0");
  EXPECT_GT(block, 0u);
  EXPECT_EQ(count(2) - count(1), block);
  EXPECT_EQ(count(5) - count(1), 4 * block);
  EXPECT_EQ(count(10) - count(5), 5 * block);
}

TEST(Backend, BlockGradients) {
  ParamStore store;
  BackendBlock blk(nn::Builder(store, 7), 3, 2);
  std::mt19937_64 rng(7);
  auto r = check_gradients(
      [&](Graph& g, const std::vector<Var>& x) {
        DualStream o = blk(g, {x[0], x[1]});
        return ops::concat({o.target, o.interference}, 0);
      },
      {random_tensor({3, 2, 3}, rng), random_tensor({3, 2, 3}, rng)}, &store);
  EXPECT_LT(r.worst(), 1e-4) << r.worst_name();
}

}  // namespace
}  // namespace cuesep
