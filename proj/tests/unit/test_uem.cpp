#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "uesr/grad_check.hpp"
#include "uesr/uem.hpp"
#include "uesr/warehouse.hpp"

using namespace uesr;

namespace {

UEMSample random_sample(Rng& rng, std::size_t obs, std::size_t inbox) {
  UEMSample s;
  s.prev_observation.resize(obs);
  s.observation.resize(obs);
  for (auto& v : s.prev_observation) v = rng.uniform01();
  for (auto& v : s.observation) v = rng.uniform01();
  s.prev_action = rng.uniform_index(kNumActions);
  s.inbox.resize(inbox);
  for (auto& v : s.inbox) v = rng.uniform01();
  return s;
}

}  // namespace

TEST_SUITE("uem") {

TEST_CASE("embedding is pure and zero for a zero observation") {
  UnexpectednessModule uem(80, 10, 10, 1);
  const std::vector<double> zero(80, 0.0);
  for (double v : uem.embed(zero)) CHECK(v == 0.0);
  Rng rng(2);
  std::vector<double> o(80);
  for (auto& v : o) v = rng.uniform01();
  CHECK(uem.embed(o) == uem.embed(o));
  CHECK(uem.embed(o).size() == kEmbeddingSize);
  CHECK_THROWS_AS(uem.embed(std::vector<double>(79, 0.0)), std::invalid_argument);
}

TEST_CASE("prediction shapes and zero weights") {
  UnexpectednessModule uem(80, 10, 5, 3);
  CHECK(uem.dynamics.at("uem.f1.weight").value.cols() == 64 + 5 + 10);
  for (auto& p : uem.dynamics) std::fill(p.value.values.begin(), p.value.values.end(), 0.0);
  const std::vector<double> e(64, 0.7), inbox(10, 0.3);
  for (double v : uem.predict(e, 2, inbox)) CHECK(v == 0.0);
  CHECK_THROWS_AS(uem.predict(e, 5, inbox), std::invalid_argument);
  CHECK_THROWS_AS(uem.predict(e, 1, std::vector<double>(9, 0.0)), std::invalid_argument);
}

TEST_CASE("prediction is stateless") {
  UnexpectednessModule uem(80, 10, 5, 4);
  Rng rng(5);
  std::vector<double> e(64), inbox(10);
  for (auto& v : e) v = rng.uniform01();
  for (auto& v : inbox) v = rng.uniform01();
  const auto a = uem.predict(e, 1, inbox);
  uem.predict(e, 3, std::vector<double>(10, 0.9));
  CHECK(uem.predict(e, 1, inbox) == a);
}

TEST_CASE("unexpectedness arithmetic and the prediction loss") {
  std::vector<double> actual(64, 0.25), predicted = actual;
  for (double v : UnexpectednessModule::unexpectedness(predicted, actual)) CHECK(v == 0.0);
  predicted[0] += 1.0;
  const auto x = UnexpectednessModule::unexpectedness(predicted, actual);
  CHECK(x[0] == 1.0);
  double n = 0.0;
  for (double v : x) n += v * v;
  CHECK(std::sqrt(n) == 1.0);

  UnexpectednessModule uem(6, 2, 3, 6);
  Rng rng(7);
  for (int k = 0; k < 20; ++k) {
    const auto s = random_sample(rng, 6, 2);
    const auto xv = UnexpectednessModule::unexpectedness(
        uem.predict(uem.embed(s.prev_observation), s.prev_action, s.inbox), uem.embed(s.observation));
    double ss = 0.0;
    for (double v : xv) ss += v * v;
    Tape t(false);
    CHECK(std::abs(t.scalar(uem.prediction_loss(t, s)) - std::sqrt(ss + 1e-8)) < 1e-12);
  }
}

TEST_CASE("message range") {
  UnexpectednessModule uem(80, 10, 5, 8);
  for (auto& p : uem.autoencoder) std::fill(p.value.values.begin(), p.value.values.end(), 0.0);
  for (double v : uem.encode_message(std::vector<double>(64, 3.0))) CHECK(v == 0.5);
  UnexpectednessModule fresh(80, 10, 5, 9);
  Rng rng(10);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(64);
    for (auto& v : x) v = rng.uniform(-20.0, 20.0);
    for (double v : fresh.encode_message(x)) CHECK((v > 0.0 && v < 1.0));
  }
  CHECK(fresh.decode(std::vector<double>(5, 0.5)).size() == 64);
}

TEST_CASE("loss gradients pass finite-difference checks") {
  UnexpectednessModule uem(7, 3, 4, 11);
  Rng rng(12);
  const auto s = random_sample(rng, 7, 3);
  ParameterSet* f[] = {&uem.dynamics};
  CHECK(grad_check([&](Tape& t) { return uem.prediction_loss(t, s); }, f).max_relative_error < 1e-5);
  std::vector<double> x(64);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  ParameterSet* ae[] = {&uem.autoencoder};
  CHECK(grad_check([&](Tape& t) { return uem.encoding_loss(t, x); }, ae).max_relative_error < 1e-5);
}

TEST_CASE("gradient routing") {
  UnexpectednessModule uem(7, 3, 4, 13);
  Rng rng(14);
  const auto s = random_sample(rng, 7, 3);
  {
    Tape t(true);
    uem.projection.zero_grad();
    uem.autoencoder.zero_grad();
    t.backward(uem.prediction_loss(t, s));
    for (const auto& p : uem.projection) for (double g : p.grad.values) CHECK(g == 0.0);
    for (const auto& p : uem.autoencoder) for (double g : p.grad.values) CHECK(g == 0.0);
  }
  std::vector<double> x(64, 0.3);
  {
    Tape t(true);
    uem.dynamics.zero_grad();
    t.backward(uem.encoding_loss(t, x));
    for (const auto& p : uem.dynamics) for (double g : p.grad.values) CHECK(g == 0.0);
  }
}

TEST_CASE("update trains f and the autoencoder, never g") {
  UnexpectednessModule uem(7, 3, 4, 15);
  Rng rng(16);
  std::vector<UEMSample> batch;
  for (int k = 0; k < 8; ++k) batch.push_back(random_sample(rng, 7, 3));
  const auto g0 = uem.projection;
  const auto f0 = uem.dynamics;
  const auto ae0 = uem.autoencoder;
  OptimizerConfig cfg;
  cfg.learning_rate = 1e-3;
  const auto l = uem.update(batch, cfg);
  CHECK(l.prediction > 0.0);
  CHECK(l.encoding > 0.0);
  CHECK(uem.projection == g0);
  CHECK_FALSE(uem.dynamics == f0);
  CHECK_FALSE(uem.autoencoder == ae0);
  CHECK(uem.update({}, cfg).prediction == 0.0);
}

}  // TEST_SUITE
