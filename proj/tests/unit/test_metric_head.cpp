#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "osd/metric_head.hpp"

using namespace osd;

namespace {

// Oracle: probabilities straight from the definition, in long double.
std::vector<double> direct_probs(const std::vector<double>& e, std::size_t c) {
  std::vector<long double> w(c);
  long double z = 0;
  for (std::size_t t = 0; t < c; ++t) {
    long double d = 0;
    for (std::size_t i = 0; i < c; ++i) {
      const long double diff = e[i] - (i == t ? static_cast<long double>(c) : 0.0L);
      d += diff * diff;
    }
    w[t] = std::exp(-d);
    z += w[t];
  }
  std::vector<double> p(c);
  for (std::size_t t = 0; t < c; ++t) p[t] = static_cast<double>(w[t] / z);
  return p;
}

}  // namespace

TEST(Prototypes, OneHotScaledByClassCount) {
  const Prototypes p(4);
  EXPECT_EQ(p.num_classes(), 4u);
  EXPECT_EQ(p.vector(2), (Embedding{0, 0, 4, 0}));
  EXPECT_THROW(p.vector(4), std::invalid_argument);
  EXPECT_THROW(Prototypes(0), std::invalid_argument);
}

TEST(ClassProbabilities, SpecExamples) {
  const Prototypes p2(2), p3(3);
  const auto u = class_probabilities(std::vector<double>{0, 0, 0}, p3);
  for (double v : u) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const auto q = class_probabilities(std::vector<double>{2, 0}, p2);
  EXPECT_NEAR(q[0], 1.0 / (1.0 + std::exp(-8.0)), 1e-15);
  EXPECT_NEAR(q[0], 0.999665, 1e-6);
}

TEST(ClassProbabilities, DimensionMismatchThrows) {
  EXPECT_THROW(class_probabilities(std::vector<double>{1, 2}, Prototypes(3)),
               std::invalid_argument);
}

TEST(ClassProbabilities, SumsToOneAndStaysPositiveForFarEmbeddings) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  for (std::size_t c = 2; c <= 8; ++c) {
    for (int k = 0; k < 50; ++k) {
      std::vector<double> e(c);
      for (double& v : e) v = 3.0 * n(rng);
      const auto p = class_probabilities(e, Prototypes(c));
      EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
      const auto ref = direct_probs(e, c);
      for (std::size_t i = 0; i < c; ++i) {
        EXPECT_GT(p[i], 0.0);
        EXPECT_LT(p[i], 1.0 + 1e-15);
        EXPECT_NEAR(p[i], ref[i], 1e-12);
      }
    }
  }
  // Distances ~1e4 underflow a naive implementation to 0/0.
  const auto far = class_probabilities(std::vector<double>{100, 101, 99}, Prototypes(3));
  EXPECT_NEAR(std::accumulate(far.begin(), far.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(argmax(far), 1u);
}

TEST(ClassProbabilities, ArgmaxInvariantUnderDistanceShift) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 2);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> e(4);
    for (double& v : e) v = n(rng);
    std::vector<double> neg_d = Prototypes(4).squared_distances(e);
    for (double& v : neg_d) v = -v;
    std::vector<double> shifted = neg_d;
    for (double& v : shifted) v -= 37.5;
    EXPECT_EQ(argmax(softmax(neg_d)), argmax(softmax(shifted)));
    EXPECT_EQ(argmax(class_probabilities(e, Prototypes(4))), argmax(softmax(shifted)));
  }
}

TEST(NaiveConfidence, Examples) {
  EXPECT_DOUBLE_EQ(naive_confidence(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 0.25);
  EXPECT_DOUBLE_EQ(naive_confidence(std::vector<double>{0.7, 0.2, 0.1}), 0.7);
  const auto p = class_probabilities(Prototypes(2).vector(0), Prototypes(2));
  EXPECT_NEAR(naive_confidence(p), 0.999665, 1e-6);
  EXPECT_THROW(naive_confidence(std::vector<double>{}), std::invalid_argument);
}

TEST(MetricLoss, SpecExamples) {
  const Prototypes p2(2), p3(3);
  EXPECT_NEAR(metric_loss(std::vector<double>{0, 0, 0}, 1, p3), std::log(3.0), 1e-14);
  EXPECT_NEAR(metric_loss(p2.vector(0), 0, p2), std::log1p(std::exp(-8.0)), 1e-15);
  EXPECT_NEAR(metric_loss(p2.vector(0), 0, p2), 3.354e-4, 1e-7);
  const double expected = 18.0 + std::log1p(2.0 * std::exp(-18.0));
  EXPECT_NEAR(metric_loss(p3.vector(1), 0, p3), expected, 1e-12);
}

TEST(MetricLoss, InvalidLabelThrows) {
  EXPECT_THROW(metric_loss(std::vector<double>{0, 0}, 2, Prototypes(2)), std::invalid_argument);
  EXPECT_THROW(loss_gradient(std::vector<double>{0, 0}, 5, Prototypes(2)),
               std::invalid_argument);
}

TEST(MetricLoss, NonDecreasingFromPrototypeTowardOrigin) {
  for (std::size_t c = 2; c <= 6; ++c) {
    const Prototypes p(c);
    const Embedding m = p.vector(c - 1);
    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
      Embedding e = m;
      for (double& v : e) v *= 1.0 - i / 200.0;
      const double loss = metric_loss(e, c - 1, p);
      EXPECT_GE(loss, prev);
      EXPECT_GE(loss, 0.0);
      prev = loss;
    }
  }
}

TEST(LossGradient, SpecOriginExample) {
  const auto g = loss_gradient(std::vector<double>{0, 0}, 0, Prototypes(2));
  EXPECT_NEAR(g[0], -2.0, 1e-14);
  EXPECT_NEAR(g[1], 2.0, 1e-14);
}

TEST(LossGradient, VanishesAtAttainedPrototype) {
  const Prototypes p(5);
  const auto g = loss_gradient(p.vector(3), 3, p);
  for (double v : g) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(LossGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  const double h = 1e-5;
  for (std::size_t c = 2; c <= 8; ++c) {
    const Prototypes p(c);
    for (int k = 0; k < 15; ++k) {
      std::vector<double> e(c);
      for (double& v : e) v = c * 0.5 * (1.0 + n(rng));
      const std::size_t y = static_cast<std::size_t>(k) % c;
      const auto g = loss_gradient(e, y, p);
      double num = 0, den = 0;
      for (std::size_t i = 0; i < c; ++i) {
        auto a = e, b = e;
        a[i] += h;
        b[i] -= h;
        const double fd = (metric_loss(a, y, p) - metric_loss(b, y, p)) / (2 * h);
        num += (g[i] - fd) * (g[i] - fd);
        den += fd * fd;
      }
      EXPECT_LE(std::sqrt(num / den), 1e-5) << "C=" << c;
    }
  }
}

TEST(Eds, SpecExamples) {
  EXPECT_DOUBLE_EQ(eds(std::vector<double>{0, 0, 0}, Prototypes(3)), 27.0);
  EXPECT_DOUBLE_EQ(eds(Prototypes(3).vector(0), Prototypes(3)), 36.0);
  EXPECT_DOUBLE_EQ(eds(Prototypes(2).vector(0), Prototypes(2)), 8.0);
  EXPECT_DOUBLE_EQ(eds(std::vector<double>{0, 0}, Prototypes(2)), 8.0);
  EXPECT_THROW(eds(std::vector<double>{0, 0}, Prototypes(3)), std::invalid_argument);
}

TEST(Eds, OriginBelowPrototypeFromThreeClasses) {
  for (std::size_t c = 2; c <= 10; ++c) {
    const Prototypes p(c);
    const double cd = static_cast<double>(c);
    const double origin = eds(std::vector<double>(c, 0.0), p);
    const double proto = eds(p.vector(0), p);
    EXPECT_EQ(origin, cd * cd * cd);
    EXPECT_EQ(proto, 2 * cd * cd * (cd - 1));
    if (c == 2) {
      EXPECT_EQ(origin, proto);
    } else {
      EXPECT_LT(origin, proto);
    }
  }
}

TEST(HeadKindNames, RoundTrip) {
  EXPECT_EQ(head_kind_from_string("metric"), HeadKind::kMetric);
  EXPECT_EQ(head_kind_from_string("softmax"), HeadKind::kSoftmax);
  EXPECT_EQ(to_string(HeadKind::kSoftmax), "softmax");
  EXPECT_THROW(head_kind_from_string("svm"), std::invalid_argument);
}

TEST(Embed, ZeroModelGivesZeroVector) {
  HeadModel m = HeadModel::initialize(HeadKind::kMetric, 4, 5, 3, 1);
  std::fill(m.w1.begin(), m.w1.end(), 0.0);
  std::fill(m.b1.begin(), m.b1.end(), 0.0);
  std::fill(m.w2.begin(), m.w2.end(), 0.0);
  std::fill(m.b2.begin(), m.b2.end(), 0.0);
  EXPECT_EQ(embed(m, std::vector<double>{1, 2, 3, 4}), (std::vector<double>{0, 0, 0}));
}

TEST(Embed, IdentityLayersReproducePrototype) {
  HeadModel m = HeadModel::initialize(HeadKind::kMetric, 3, 3, 3, 1);
  std::fill(m.w1.begin(), m.w1.end(), 0.0);
  std::fill(m.w2.begin(), m.w2.end(), 0.0);
  std::fill(m.b1.begin(), m.b1.end(), 0.0);
  std::fill(m.b2.begin(), m.b2.end(), 0.0);
  for (std::size_t i = 0; i < 3; ++i) m.w1[i * 3 + i] = m.w2[i * 3 + i] = 1.0;
  const Embedding m2 = Prototypes(3).vector(1);
  EXPECT_EQ(embed(m, m2), m2);
}

TEST(Embed, DeterministicAndChecksDimensions) {
  const HeadModel m = HeadModel::initialize(HeadKind::kMetric, 4, 8, 3, 9);
  const std::vector<double> x = {0.1, -0.2, 0.3, 0.4};
  EXPECT_EQ(embed(m, x), embed(m, x));
  EXPECT_THROW(embed(m, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(Initialize, GlorotBoundsAndSeededDeterminism) {
  const HeadModel a = HeadModel::initialize(HeadKind::kMetric, 9, 32, 3, 5);
  const HeadModel b = HeadModel::initialize(HeadKind::kMetric, 9, 32, 3, 5);
  const HeadModel c = HeadModel::initialize(HeadKind::kMetric, 9, 32, 3, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.w1, c.w1);
  const double l1 = std::sqrt(6.0 / (9 + 32)), l2 = std::sqrt(6.0 / (32 + 3));
  for (double v : a.w1) EXPECT_LE(std::abs(v), l1);
  for (double v : a.w2) EXPECT_LE(std::abs(v), l2);
  EXPECT_EQ(a.w1.size(), 32u * 9u);
  EXPECT_EQ(a.w2.size(), 3u * 32u);
}

namespace {

std::vector<TrainSample> separable_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0, 0.1);
  std::vector<TrainSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % 2;
    const double centre = y == 0 ? -1.0 : 1.0;
    out.push_back({{centre + noise(rng), 0.5 * centre + noise(rng), noise(rng)}, y});
  }
  return out;
}

}  // namespace

TEST(Train, ZeroEpochsReturnsInitialization) {
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.hidden = 6;
  cfg.seed = 4;
  const auto samples = separable_samples(10, 1);
  const TrainResult r = train(samples, cfg, HeadKind::kMetric, 2);
  EXPECT_EQ(r.model, HeadModel::initialize(HeadKind::kMetric, 3, 6, 2, 4));
  EXPECT_TRUE(r.epoch_losses.empty());
}

TEST(Train, LossDecreasesOnSeparableData) {
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.hidden = 16;
  const auto samples = separable_samples(40, 2);
  for (HeadKind kind : {HeadKind::kMetric, HeadKind::kSoftmax}) {
    const double initial =
        mean_loss(HeadModel::initialize(kind, 3, cfg.hidden, 2, cfg.seed), samples);
    const TrainResult r = train(samples, cfg, kind, 2);
    EXPECT_EQ(r.epoch_losses.size(), 50u);
    EXPECT_LT(mean_loss(r.model, samples), initial);
    EXPECT_LT(r.epoch_losses.back(), r.epoch_losses.front());
  }
}

TEST(Train, SameSeedSameWeights) {
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto samples = separable_samples(20, 3);
  EXPECT_EQ(train(samples, cfg, HeadKind::kMetric, 2).model,
            train(samples, cfg, HeadKind::kMetric, 2).model);
}

TEST(Train, RejectsEmptyAndBadLabels) {
  TrainConfig cfg;
  EXPECT_THROW(train(std::vector<TrainSample>{}, cfg, HeadKind::kMetric, 2),
               std::invalid_argument);
  std::vector<TrainSample> bad = {{{1.0, 2.0}, 3}};
  EXPECT_THROW(train(bad, cfg, HeadKind::kMetric, 2), std::invalid_argument);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ModelPersistence, RoundTripsAndRejectsInconsistentShapes) {
  HeadModel m = HeadModel::initialize(HeadKind::kSoftmax, 4, 6, 3, 12);
  m.class_names = {"car", "pedestrian", "cyclist"};
  EXPECT_EQ(load_model(save_model(m)), m);

  auto doc = nlohmann::json::parse(save_model(m));
  doc["w1"].erase(0);
  EXPECT_THROW(load_model(doc.dump()), std::runtime_error);
  doc = nlohmann::json::parse(save_model(m));
  doc["hidden"] = 7;
  EXPECT_THROW(load_model(doc.dump()), std::runtime_error);
  EXPECT_THROW(load_model("{not json"), std::runtime_error);
}
