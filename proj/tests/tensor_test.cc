// tests/tensor_test.cc

// Copyright 2026  The nar-asr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "narasr/errors.h"
#include "narasr/gradcheck.h"
#include "narasr/ops.h"
#include "narasr/tensor.h"

namespace narasr {
namespace {

Tensor Random(const Shape& shape, Rng& rng, bool requires_grad = true) {
  std::vector<double> v(ShapeNumel(shape));
  for (double& x : v) x = rng.Uniform(-1.0, 1.0);
  return Tensor::FromVector(shape, std::move(v), requires_grad);
}

Tensor M(const Shape& shape, std::vector<double> v) {
  return Tensor::FromVector(shape, std::move(v));
}

TEST(TensorTest, ShapeMustMatchData) {
  EXPECT_THROW(Tensor::FromVector({2, 2}, {1, 2, 3}), DimensionError);
  Tensor t = Tensor::Zeros({3, 4});
  EXPECT_EQ(t.size(), 12u);
  EXPECT_FALSE(t.has_grad());
}

TEST(MatmulTest, Examples) {
  Tensor a = M({2, 2}, {1, 2, 3, 4});
  Tensor id = M({2, 2}, {1, 0, 0, 1});
  Tensor r = Matmul(a, id);
  EXPECT_EQ(std::vector<double>(r.data().begin(), r.data().end()),
            (std::vector<double>{1, 2, 3, 4}));

  Tensor c = Matmul(a, M({2, 1}, {5, 6}));
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(c.at(0), 17.0);
  EXPECT_EQ(c.at(1), 39.0);

  Rng rng(3);
  Tensor z = Matmul(Tensor::Zeros({3, 4}), Random({4, 2}, rng));
  EXPECT_EQ(z.shape(), (Shape{3, 2}));
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
}

TEST(MatmulTest, ShapeMismatchNamesBothShapes) {
  try {
    Matmul(Tensor::Zeros({2, 3}), Tensor::Zeros({2, 3}));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3] x [2x3]"), std::string::npos);
  }
}

TEST(SoftmaxTest, Examples) {
  Tensor a = Softmax(M({2}, {0, 0}), 0);
  EXPECT_DOUBLE_EQ(a.at(0), 0.5);
  EXPECT_DOUBLE_EQ(a.at(1), 0.5);
  Tensor b = Softmax(M({2}, {1000, 1000}), 0);
  EXPECT_DOUBLE_EQ(b.at(0), 0.5);
  Tensor c = Softmax(M({2}, {0, std::log(3.0)}), 0);
  EXPECT_NEAR(c.at(0), 0.25, 1e-15);
  EXPECT_NEAR(c.at(1), 0.75, 1e-15);
  EXPECT_THROW(Softmax(M({2}, {0, 0}), 1), DimensionError);
}

TEST(SoftmaxTest, RowsSumToOneAndShiftInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = Random({3, 5}, rng, false);
    const double shift = rng.Uniform(-1e4, 1e4);
    std::vector<double> shifted(x.data().begin(), x.data().end());
    for (double& v : shifted) v += shift;
    for (int axis = 0; axis < 2; ++axis) {
      Tensor y = Softmax(x, axis);
      Tensor ys = Softmax(M({3, 5}, shifted), axis);
      for (size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.at(i), ys.at(i), 1e-6);
    }
    Tensor y = Softmax(x, 1);
    for (int r = 0; r < 3; ++r) {
      double s = 0;
      for (int c = 0; c < 5; ++c) s += y.at(r, c);
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(LayerNormTest, Examples) {
  Tensor ones = Tensor::Full({4}, 1.0);
  Tensor zeros = Tensor::Zeros({4});
  Tensor c = LayerNorm(Tensor::Full({4}, 7.5), ones, zeros, 1e-5);
  for (double v : c.data()) EXPECT_NEAR(v, 0.0, 1e-9);

  Tensor b = LayerNorm(M({2}, {-1, 1}), Tensor::Full({2}, 1.0),
                       Tensor::Zeros({2}), 1e-12);
  EXPECT_NEAR(b.at(0), -1.0, 1e-9);
  EXPECT_NEAR(b.at(1), 1.0, 1e-9);

  Rng rng(5);
  Tensor collapse = LayerNorm(Random({3, 4}, rng, false), zeros,
                              Tensor::Full({4}, 2.5), 1e-5);
  for (double v : collapse.data()) EXPECT_EQ(v, 2.5);

  EXPECT_THROW(LayerNorm(Tensor::Zeros({2, 3}), ones, zeros, 1e-5),
               DimensionError);
}

TEST(GluTest, Examples) {
  Tensor a = Glu(M({4}, {3, -2, 0, 0}));
  EXPECT_EQ(a.at(0), 1.5);
  EXPECT_EQ(a.at(1), -1.0);
  EXPECT_NEAR(Glu(M({2}, {2, 20})).at(0), 2.0, 1e-8);
  // sigmoid(-20) ~ 2e-9, so the gate closes to within 5 * 2.1e-9.
  EXPECT_NEAR(Glu(M({2}, {5, -20})).at(0), 0.0, 1.1e-8);
  EXPECT_NEAR(Glu(M({2}, {5, -20})).at(0), 5.0 / (1.0 + std::exp(20.0)), 1e-20);
  EXPECT_THROW(Glu(Tensor::Zeros({3})), DimensionError);
}

TEST(Conv2dTest, IdentityKernel) {
  Rng rng(2);
  Tensor x = Random({1, 5, 6}, rng, false);
  Tensor y = Conv2d(x, Tensor::Full({1, 1, 1, 1}, 1.0), Tensor(), 1);
  ASSERT_EQ(y.shape(), x.shape());
  for (size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.at(i), x.at(i));
}

TEST(Conv2dTest, OnesKernelInterior) {
  Tensor x = Tensor::Full({1, 5, 5}, 0.7);
  Tensor y = Conv2d(x, Tensor::Full({1, 1, 3, 3}, 1.0), Tensor(), 1);
  EXPECT_NEAR(y.at(2 * 5 + 2), 9 * 0.7, 1e-12);
  // Corner only covers a 2x2 patch because of zero padding.
  EXPECT_NEAR(y.at(0), 4 * 0.7, 1e-12);
}

TEST(Conv2dTest, SameLengthExhaustive) {
  Tensor k = Tensor::Full({1, 1, 3, 3}, 1.0);
  for (int h = 1; h <= 200; ++h) {
    Tensor y = Conv2d(Tensor::Zeros({1, h, 3}), k, Tensor(), 2);
    ASSERT_EQ(y.dim(1), (h + 1) / 2) << "H=" << h;
  }
  Tensor y = Conv2d(Conv2d(Tensor::Zeros({1, 100, 4}), k, Tensor(), 2), k,
                    Tensor(), 2);
  EXPECT_EQ(y.dim(1), 25);
  EXPECT_THROW(Conv2d(Tensor::Zeros({1, 0, 4}), k, Tensor(), 2),
               DimensionError);
}

TEST(EmbeddingTest, Examples) {
  Tensor table = M({3, 2}, {1, 2, 3, 4, 5, 6});
  table.set_requires_grad(true);
  std::vector<int> one{2};
  Tensor r = EmbeddingLookup(table, one);
  EXPECT_EQ(r.at(0), 5.0);
  EXPECT_EQ(r.at(1), 6.0);

  std::vector<int> twice{0, 0};
  Backward(Sum(EmbeddingLookup(table, twice)));
  EXPECT_EQ(table.grad()[0], 2.0);
  EXPECT_EQ(table.grad()[1], 2.0);
  EXPECT_EQ(table.grad()[2], 0.0);

  Tensor empty = EmbeddingLookup(table, std::vector<int>{});
  EXPECT_EQ(empty.shape(), (Shape{0, 2}));

  std::vector<int> bad{3};
  EXPECT_THROW(EmbeddingLookup(table, bad), IndexError);
}

TEST(DropoutTest, Examples) {
  Rng rng(9);
  Tensor x = Random({4, 8}, rng, false);
  Rng r1(1);
  Tensor eval = Dropout(x, 0.5, false, r1);
  for (size_t i = 0; i < x.size(); ++i) EXPECT_EQ(eval.at(i), x.at(i));
  Tensor zero_rate = Dropout(x, 0.0, true, r1);
  for (size_t i = 0; i < x.size(); ++i) EXPECT_EQ(zero_rate.at(i), x.at(i));

  Rng a(42), b(42);
  Tensor da = Dropout(x, 0.5, true, a);
  Tensor db = Dropout(x, 0.5, true, b);
  int zeros = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(da.at(i), db.at(i));
    if (da.at(i) == 0.0) ++zeros;
    else EXPECT_DOUBLE_EQ(da.at(i), 2.0 * x.at(i));
  }
  EXPECT_GT(zeros, 0);
  EXPECT_THROW(Dropout(x, 1.0, true, a), ContractError);
}

TEST(LabelSmoothedNllTest, Examples) {
  std::vector<int> targets{0, 3, 1};
  EXPECT_NEAR(LabelSmoothedNll(Tensor::Zeros({3, 5}), targets, 0.3).item(),
              std::log(5.0), 1e-12);
  std::vector<double> confident(15, 0.0);
  for (int i = 0; i < 3; ++i) confident[i * 5 + targets[i]] = 1e6;
  EXPECT_NEAR(LabelSmoothedNll(M({3, 5}, confident), targets, 0.0).item(), 0.0,
              1e-12);
  std::vector<int> t0{0};
  EXPECT_NEAR(LabelSmoothedNll(Tensor::Zeros({1, 2}), t0, 0.1).item(),
              0.6931471805599453, 1e-12);
  std::vector<int> bad{5};
  EXPECT_THROW(LabelSmoothedNll(Tensor::Zeros({1, 5}), bad, 0.1), IndexError);
}

TEST(LabelSmoothedNllTest, PositionMaskRestrictsMean) {
  Rng rng(4);
  Tensor logits = Random({3, 4}, rng, false);
  std::vector<int> targets{1, 2, 3};
  std::vector<uint8_t> only_middle{0, 1, 0};
  std::vector<int> t_mid{2};
  const double masked = LabelSmoothedNll(logits, targets, 0.1, only_middle).item();
  const double direct = LabelSmoothedNll(SliceRows(logits, 1, 2), t_mid, 0.1).item();
  EXPECT_NEAR(masked, direct, 1e-14);
}

TEST(BackwardTest, Examples) {
  Rng rng(1);
  Tensor x = Random({2, 3}, rng);
  Backward(Sum(x));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);

  Tensor a = Random({2, 3}, rng);
  Tensor b = Random({3, 4}, rng);
  Tensor unrelated = Random({2, 2}, rng);
  Backward(Sum(Matmul(a, b)));
  // d/dA sum(AB) = ones * B^T.
  for (int i = 0; i < 2; ++i)
    for (int p = 0; p < 3; ++p) {
      double expect = 0;
      for (int j = 0; j < 4; ++j) expect += b.at(p, j);
      EXPECT_NEAR(a.grad()[i * 3 + p], expect, 1e-12);
    }
  EXPECT_FALSE(unrelated.has_grad());

  EXPECT_THROW(Backward(Matmul(a, b)), ContractError);
}

TEST(BackwardTest, RepeatedCallsAccumulate) {
  Rng rng(8);
  Tensor x = Random({3}, rng);
  Tensor loss = Sum(Mul(x, x));
  Backward(loss);
  Backward(loss);
  for (size_t i = 0; i < 3; ++i) EXPECT_NEAR(x.grad()[i], 4 * x.at(i), 1e-12);
}

TEST(BackwardTest, Deterministic) {
  Rng rng(21);
  Tensor a = Random({4, 5}, rng);
  Tensor b = Random({5, 3}, rng);
  auto run = [&]() {
    a.ZeroGrad();
    b.ZeroGrad();
    Backward(Sum(Softmax(Matmul(a, b), 1)));
    return std::vector<double>(a.grad().begin(), a.grad().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(NumericFaultTest, NanRaises) {
  Tensor x = M({1}, {std::nan("")});
  EXPECT_THROW(Scale(x, 2.0), NumericFault);
  Tensor big = M({1}, {1e308});
  EXPECT_THROW(Scale(big, 10.0), NumericFault);
}

TEST(GradCheckTest, SumOfSquares) {
  Tensor x = M({3}, {1, 2, 3});
  GradCheckReport r = FiniteDifferenceCheck(
      [](const Tensor& t) { return Sum(Mul(t, t)); }, x, 1e-4, "sumsq");
  EXPECT_LT(r.max_rel_error, 1e-6);
  EXPECT_NEAR(x.grad()[0], 2.0, 1e-12);
  EXPECT_NEAR(x.grad()[2], 6.0, 1e-12);
}

TEST(GradCheckTest, ConstantFunction) {
  Tensor x = M({2}, {1, 2});
  GradCheckReport r = FiniteDifferenceCheck(
      [](const Tensor&) { return Tensor::Scalar(4.0); }, x, 1e-4);
  EXPECT_EQ(r.max_rel_error, 0.0);
}

// Every differentiable op on random small tensors.
TEST(GradCheckTest, AllOps) {
  Rng rng(1234);
  const double h = 1e-5;
  auto check = [&](const std::string& name, const std::function<Tensor()>& f,
                   std::vector<Tensor> leaves) {
    GradCheckReport r = FiniteDifferenceCheck(f, leaves, h, name);
    EXPECT_LT(r.max_rel_error, 1e-4) << name << " worst index " << r.worst_index;
  };
  Tensor a = Random({3, 4}, rng), b = Random({4, 5}, rng);
  Tensor w = Random({3, 5}, rng, false);
  check("matmul", [&] { return Sum(Mul(Matmul(a, b), w)); }, {a, b});
  Tensor t = Random({3, 4}, rng);
  Tensor wt = Random({4, 3}, rng, false);
  check("transpose", [&] { return Sum(Mul(Transpose(t), wt)); }, {t});
  Tensor c = Random({3, 4}, rng), d = Random({3, 4}, rng);
  Tensor w34 = Random({3, 4}, rng, false);
  check("add", [&] { return Sum(Mul(Add(c, d), w34)); }, {c, d});
  check("mul", [&] { return Sum(Mul(c, d)); }, {c, d});
  check("scale", [&] { return Sum(Mul(Scale(c, -1.7), w34)); }, {c});
  Tensor bias = Random({4}, rng);
  check("add_bias", [&] { return Sum(Mul(AddBias(c, bias), w34)); }, {c, bias});
  Tensor shifted = Random({3, 4}, rng);
  for (double& v : shifted.mutable_data()) v += (v > 0 ? 0.1 : -0.1);
  check("relu", [&] { return Sum(Mul(Relu(shifted), w34)); }, {shifted});
  check("sigmoid", [&] { return Sum(Mul(Sigmoid(c), w34)); }, {c});
  Tensor g = Random({3, 8}, rng);
  check("glu", [&] { return Sum(Mul(Glu(g), w34)); }, {g});
  Tensor s3 = Random({2, 3, 4}, rng);
  Tensor w234 = Random({2, 3, 4}, rng, false);
  for (int axis = 0; axis < 3; ++axis) {
    check("softmax" + std::to_string(axis),
          [&] { return Sum(Mul(Softmax(s3, axis), w234)); }, {s3});
  }
  Tensor gain = Random({4}, rng), beta = Random({4}, rng);
  check("layer_norm",
        [&] { return Sum(Mul(LayerNorm(c, gain, beta, 1e-5), w34)); },
        {c, gain, beta});
  Tensor img = Random({2, 5, 4}, rng);
  Tensor filt = Random({3, 2, 3, 3}, rng);
  Tensor cb = Random({3}, rng);
  Tensor wconv = Random({3, 3, 2}, rng, false);
  check("conv2d",
        [&] { return Sum(Mul(Conv2d(img, filt, cb, 2), wconv)); },
        {img, filt, cb});
  Tensor table = Random({5, 3}, rng);
  std::vector<int> idx{4, 0, 4, 2};
  Tensor w43 = Random({4, 3}, rng, false);
  check("embedding",
        [&] { return Sum(Mul(EmbeddingLookup(table, idx), w43)); }, {table});
  Tensor logits = Random({4, 5}, rng);
  std::vector<int> targets{1, 0, 4, 2};
  check("label_smoothed_nll",
        [&] { return LabelSmoothedNll(logits, targets, 0.1); }, {logits});
  std::vector<uint8_t> pm{1, 0, 1, 1};
  check("label_smoothed_nll_masked",
        [&] { return LabelSmoothedNll(logits, targets, 0.0, pm); }, {logits});
  check("mean", [&] { return Mean(Mul(c, c)); }, {c});
  Tensor w26 = Random({2, 6}, rng, false);
  check("reshape", [&] { return Sum(Mul(Reshape(c, {2, 6}), w26)); }, {c});
  Tensor w24 = Random({2, 4}, rng, false);
  check("slice_rows", [&] { return Sum(Mul(SliceRows(c, 1, 3), w24)); }, {c});
  Tensor w32 = Random({3, 2}, rng, false);
  check("slice_cols", [&] { return Sum(Mul(SliceCols(c, 1, 3), w32)); }, {c});
  Tensor w38 = Random({3, 8}, rng, false);
  check("concat_cols", [&] { return Sum(Mul(ConcatCols({c, d}), w38)); },
        {c, d});
  Tensor w64 = Random({6, 4}, rng, false);
  check("concat_rows", [&] { return Sum(Mul(ConcatRows({c, d}), w64)); },
        {c, d});
  Tensor w324 = Random({3, 2, 4}, rng, false);
  check("swap_leading_axes",
        [&] { return Sum(Mul(SwapLeadingAxes(s3), w324)); }, {s3});
  std::vector<uint8_t> keep{1, 0, 1, 1, 0, 1, 1, 1, 1, 0, 0, 1};
  check("masked_fill",
        [&] { return Sum(Mul(MaskedFill(c, keep, -3.0), w34)); }, {c});
  Rng fixed(77);
  check("dropout",
        [&] {
          Rng local = fixed;
          return Sum(Mul(Dropout(c, 0.3, true, local), w34));
        },
        {c});
}

}  // namespace
}  // namespace narasr
