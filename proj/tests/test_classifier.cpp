#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "rewardloop/classifier.hpp"
#include "support/classifier_checks.hpp"

using namespace rewardloop;

namespace {
FeatureVec vec(std::initializer_list<double> v) {
  FeatureVec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}
}  // namespace

TEST_CASE("encoder modes") {
  ClassifierState id(2);
  CHECK(encode(id, vec({1, -3})) == vec({1, -3}));
  ClassifierState unit(2, 16.0, Encoder::affine(Eigen::MatrixXd::Identity(2, 2), FeatureVec::Zero(2)));
  CHECK(encode(unit, vec({1, -3})) == vec({1, -3}));
  ClassifierState twice(2, 16.0, Encoder::affine(2.0 * Eigen::MatrixXd::Identity(2, 2), FeatureVec::Zero(2)));
  CHECK(encode(twice, vec({1, 1})) == vec({2, 2}));
  CHECK_THROWS_AS(Encoder::affine(Eigen::MatrixXd::Identity(2, 3), FeatureVec::Zero(2)), DimensionError);
}

TEST_SUITE("prototypes") {
  TEST_CASE("initialization from shots") {
    ClassifierState s(2);
    s = init_prototypes(s, {{3, {vec({0, 0}), vec({2, 0})}}, {5, {vec({1, 4})}}});
    CHECK(s.prototype(3).mu == vec({1, 0}));
    CHECK(s.prototype(5).mu == vec({1, 4}));
    CHECK(s.index_of(3) == 0);
    CHECK(s.index_of(5) == 1);
  }

  TEST_CASE("K = 5 random shots give the arithmetic mean, in any order") {
    std::mt19937_64 rng(3);
    std::vector<FeatureVec> shots;
    for (int i = 0; i < 5; ++i) shots.push_back(oracles::random_vec(8, rng));
    FeatureVec mean = FeatureVec::Zero(8);
    for (const auto& x : shots) mean += x;
    mean /= 5.0;
    const ClassifierState s = init_prototypes(ClassifierState(8), {{0, shots}});
    CHECK((s.prototype(0).mu - mean).cwiseAbs().maxCoeff() <= 1e-12);
    for (int k = 0; k < 10; ++k) {
      std::shuffle(shots.begin(), shots.end(), rng);
      const ClassifierState p = init_prototypes(ClassifierState(8), {{0, shots}});
      CHECK((p.prototype(0).mu - s.prototype(0).mu).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("other classes are untouched") {
    ClassifierState s(2);
    s.set_prototype(1, vec({5, 5}));
    s = init_prototypes(s, {{2, {vec({1, 0})}}});
    CHECK(s.prototype(1).mu == vec({5, 5}));
  }
}

TEST_SUITE("logits and prediction") {
  TEST_CASE("values") {
    ClassifierState s(2);
    s.set_prototype(0, vec({1, 0}));
    s.set_prototype(1, vec({0, 1}));
    const Eigen::VectorXd self = logits(s, vec({3, 0}));
    CHECK(self(0) == doctest::Approx(16.0).epsilon(1e-14));
    CHECK(self(1) == 0.0);

    ClassifierState o(3);
    o.set_prototype(0, vec({1, 0, 0}));
    o.set_prototype(1, vec({0, 1, 0}));
    CHECK(logits(o, vec({0, 0, 2})).isZero());

    ClassifierState h(2);
    h.set_prototype(0, vec({1, 0}));
    CHECK(logits(h, vec({1, std::sqrt(3.0)}))(0) == doctest::Approx(8.0).epsilon(1e-14));
  }

  TEST_CASE("ties go to the lowest class id") {
    ClassifierState s(2);
    s.set_prototype(7, vec({1, 0}));
    s.set_prototype(3, vec({0, 1}));
    CHECK(ncm_predict(s, vec({1, 1})) == 3);
    CHECK(ncm_predict(s, vec({1, 0})) == 7);
  }

  TEST_CASE("agrees with a brute-force nearest-prototype scan") {
    std::mt19937_64 rng(4);
    ClassifierState s(5);
    for (int c = 0; c < 6; ++c) s.set_prototype(c * 2, oracles::random_vec(5, rng));
    for (int i = 0; i < 200; ++i) {
      const FeatureVec x = oracles::random_vec(5, rng);
      int best = -1;
      double best_cos = -2.0;
      for (const auto& p : s.prototypes()) {
        const double c = cosine_sim(x, p.mu);
        if (c > best_cos) {
          best_cos = c;
          best = p.class_id;
        }
      }
      CHECK(ncm_predict(s, x) == best);
    }
  }

  TEST_CASE("positive scaling changes nothing") {
    std::mt19937_64 rng(5);
    ClassifierState s(4);
    for (int c = 0; c < 4; ++c) s.set_prototype(c, oracles::random_vec(4, rng));
    for (int i = 0; i < 50; ++i) {
      const FeatureVec x = oracles::random_vec(4, rng);
      const double k = 0.001 + 7.0 * i;
      CHECK((logits(s, FeatureVec(k * x)) - logits(s, x)).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(ncm_predict(s, FeatureVec(k * x)) == ncm_predict(s, x));
    }
  }
}

TEST_SUITE("training") {
  TEST_CASE("prototype gradient matches central differences") {
    for (std::uint64_t seed : {1, 2, 3}) {
      CHECK(classifier_checks::prototype_gradient_error(classifier_checks::random_three_class(seed)) <= 1e-5);
    }
  }

  TEST_CASE("affine encoder gradient matches central differences") {
    std::mt19937_64 rng(9);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4) + 0.2 * Eigen::MatrixXd::Random(4, 4);
    const auto inst = classifier_checks::random_three_class(4, 4, Encoder::affine(a, oracles::random_vec(4, rng, 0.1)));
    CHECK(classifier_checks::prototype_gradient_error(inst) <= 1e-5);
    const LossGradient g = cross_entropy_gradient(inst.state, inst.data);
    double worst = 0.0;
    for (Eigen::Index r = 0; r < 4; ++r) {
      for (Eigen::Index c = 0; c < 4; ++c) {
        auto loss_at = [&](double v) {
          ClassifierState s = inst.state;
          s.mutable_encoder().a(r, c) = v;
          return cross_entropy_loss(s, inst.data);
        };
        const double h = 1e-6, v = inst.state.encoder().a(r, c);
        worst = std::max(worst, std::abs((loss_at(v + h) - loss_at(v - h)) / (2 * h) - g.encoder_a(r, c)));
      }
    }
    CHECK(worst / g.encoder_a.cwiseAbs().maxCoeff() <= 1e-5);
  }

  TEST_CASE("zero learning rate is a null update") {
    auto inst = classifier_checks::random_three_class(11);
    const TrainResult r = train_epochs(inst.state, inst.data, {10, 0.0});
    for (const auto& p : inst.state.prototypes()) CHECK(r.state.prototype(p.class_id).mu == p.mu);
    for (double l : r.loss_curve) CHECK(l == r.loss_curve.front());
  }

  TEST_CASE("two separated classes are learned") {
    std::mt19937_64 rng(12);
    std::vector<LabeledFeature> data;
    for (int i = 0; i < 20; ++i) {
      data.push_back({FeatureVec(vec({3, 0, 0}) + oracles::random_vec(3, rng, 0.5)), 0});
      data.push_back({FeatureVec(vec({0, 3, 0}) + oracles::random_vec(3, rng, 0.5)), 1});
    }
    ClassifierState s(3);
    s.set_prototype(0, vec({1, 1, 1}));
    s.set_prototype(1, vec({1, 1.1, 0.9}));
    const TrainResult r = train_epochs(s, data, {50, 0.5});
    CHECK(session_accuracy(r.state, data) == 100.0);
    CHECK(r.loss_curve.back() < r.loss_curve.front());
    CHECK(r.loss_curve.size() == 51);
  }

  TEST_CASE("classes absent from the batch keep their prototypes") {
    auto inst = classifier_checks::random_three_class(13);
    std::vector<LabeledFeature> only_first;
    for (const auto& item : inst.data) {
      if (item.class_id == 10) only_first.push_back(item);
    }
    const TrainResult r = train_epochs(inst.state, only_first, {20, 0.5});
    CHECK(r.state.prototype(11).mu == inst.state.prototype(11).mu);
    CHECK(r.state.prototype(12).mu == inst.state.prototype(12).mu);
    CHECK(r.state.prototype(10).mu != inst.state.prototype(10).mu);
  }

  TEST_CASE("a frozen encoder does not move") {
    auto inst = classifier_checks::random_three_class(14, 3, Encoder::affine(Eigen::MatrixXd::Identity(3, 3), FeatureVec::Zero(3)));
    inst.state.set_encoder_frozen(true);
    const TrainResult r = train_epochs(inst.state, inst.data, {5, 0.5});
    CHECK(r.state.encoder().a == inst.state.encoder().a);
    inst.state.set_encoder_frozen(false);
    CHECK(train_epochs(inst.state, inst.data, {5, 0.5}).state.encoder().a != inst.state.encoder().a);
  }

  TEST_CASE("unknown labels and empty data are rejected") {
    auto inst = classifier_checks::random_three_class(15);
    std::vector<LabeledFeature> bad{{FeatureVec::Zero(6), 99}};
    CHECK_THROWS_AS(train_epochs(inst.state, bad, {}), ParameterError);
    CHECK_THROWS_AS(train_epochs(inst.state, std::span<const LabeledFeature>{}, {}), DegenerateInputError);
  }
}

TEST_SUITE("accuracy") {
  TEST_CASE("average accuracy") {
    const std::vector<double> h{80, 70, 60};
    CHECK(average_accuracy(h) == doctest::Approx(70.0).epsilon(1e-15));
    const std::vector<double> one{42.5};
    CHECK(average_accuracy(one) == 42.5);
    const std::vector<double> table{82.43, 77.54, 73.00, 69.21, 67.05, 64.44, 61.20, 60.43, 57.99};
    CHECK(std::abs(average_accuracy(table) - 68.14) <= 0.005);
  }

  TEST_CASE("session accuracy counts hits") {
    ClassifierState s(2);
    s.set_prototype(0, vec({1, 0}));
    s.set_prototype(1, vec({0, 1}));
    const std::vector<LabeledFeature> ev{{vec({1, 0.1}), 0}, {vec({0.1, 1}), 1}, {vec({1, 0}), 1}, {vec({2, 0}), 0}};
    CHECK(session_accuracy(s, ev) == 75.0);
  }
}

TEST_CASE("checkpoint round trip is exact") {
  std::mt19937_64 rng(16);
  for (bool affine : {false, true}) {
    Encoder enc;
    if (affine) enc = Encoder::affine(Eigen::MatrixXd::Random(5, 5), oracles::random_vec(5, rng));
    ClassifierState s(5, 12.5, enc);
    s.set_encoder_frozen(affine);
    for (int c : {4, 1, 9}) s.set_prototype(c, oracles::random_vec(5, rng, 1.0 / 3.0));
    std::stringstream buf;
    save_checkpoint(s, buf);
    const ClassifierState t = load_checkpoint(buf);
    CHECK(t.dim() == 5);
    CHECK(t.logit_scale() == 12.5);
    CHECK(t.encoder_frozen() == affine);
    CHECK(t.encoder().mode == s.encoder().mode);
    REQUIRE(t.num_classes() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(t.prototypes()[i].class_id == s.prototypes()[i].class_id);
      CHECK(t.prototypes()[i].mu == s.prototypes()[i].mu);
    }
    if (affine) {
      CHECK(t.encoder().a == s.encoder().a);
      CHECK(t.encoder().b == s.encoder().b);
    }
    std::stringstream again;
    save_checkpoint(t, again);
    std::stringstream first;
    save_checkpoint(s, first);
    CHECK(again.str() == first.str());
  }
  std::istringstream junk("not-a-checkpoint 1\n");
  CHECK_THROWS(load_checkpoint(junk));
}
