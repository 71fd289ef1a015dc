#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include <array>

#include "uesr/actor_critic.hpp"
#include "uesr/warehouse.hpp"
#include "uesr/grad_check.hpp"

using namespace uesr;

namespace {

TrajectoryBatch random_batch(Rng& rng, int envs, int steps, std::size_t input, int bits) {
  TrajectoryBatch b(envs, steps);
  for (std::size_t k = 0; k < b.inputs.size(); ++k) {
    b.inputs[k].resize(input);
    for (auto& v : b.inputs[k]) v = rng.uniform(-1.0, 1.0);
    b.actions[k] = rng.uniform_index(kNumActions);
    for (int j = 0; j < bits; ++j) b.message_bits[k].push_back(static_cast<int>(rng.uniform_index(2)));
    b.rewards[k] = rng.uniform01() < 0.3 ? 0.5 : 0.0;
  }
  for (int e = 0; e < envs; ++e) {
    auto& h = b.initial_hidden[static_cast<std::size_t>(e)];
    for (auto& v : h) v = rng.uniform(-0.5, 0.5);
    b.final_inputs[static_cast<std::size_t>(e)] = b.inputs[b.at(e, steps - 1)];
  }
  return b;
}

void zero_all(ParameterSet& p) {
  for (auto& param : p) std::fill(param.value.values.begin(), param.value.values.end(), 0.0);
}

}  // namespace

TEST_SUITE("a2c") {

TEST_CASE("scheme table") {
  CHECK(default_split(Scheme::None) == SchemeSplit{0, 0});
  CHECK(default_split(Scheme::R) == SchemeSplit{10, 0});
  CHECK(default_split(Scheme::UES) == SchemeSplit{0, 10});
  CHECK(default_split(Scheme::UES_R) == SchemeSplit{5, 5});
  for (auto s : {Scheme::R, Scheme::UES, Scheme::UES_R}) CHECK(default_split(s).total() == 10);
  for (auto s : {Scheme::None, Scheme::R, Scheme::UES, Scheme::UES_R}) {
    CHECK(parse_scheme(scheme_name(s)) == s);
  }
  CHECK_THROWS_AS(parse_scheme("mappo"), std::invalid_argument);
  CHECK(A2CConfig::defaults(Scheme::None).optimizer.learning_rate == 5e-4);
  CHECK(A2CConfig::defaults(Scheme::UES).optimizer.learning_rate == 1e-3);
  CHECK(A2CConfig::defaults(Scheme::UES_R).optimizer.learning_rate == 5e-4);
  CHECK(A2CConfig::defaults(Scheme::UES_R).entropy_coefficient == 0.05);
  CHECK(A2CConfig::defaults(Scheme::R).entropy_coefficient == 0.01);
  const auto d = A2CConfig::defaults(Scheme::R);
  CHECK(d.n_steps == 5);
  CHECK(d.batch_envs == 10);
  CHECK(d.gamma == 0.99);
  CHECK(d.optimizer.adam_beta2 == 0.99);
  CHECK(d.optimizer.adam_epsilon == 1e-5);
  CHECK(d.optimizer.soft_update_tau == 0.01);
}

TEST_CASE("n-step returns") {
  const std::vector<double> r{1, 0, 0, 0, 0};
  const std::vector<std::uint8_t> no_done(5, 0);
  std::vector<double> boot(5, 0.0);
  boot[4] = 2.0;
  const auto R = compute_returns(r, no_done, boot, 0.99, 5);
  CHECK(R[0] == doctest::Approx(1.0 + std::pow(0.99, 5) * 2.0).epsilon(1e-14));
  CHECK(R[0] == doctest::Approx(2.90198).epsilon(1e-6));
  CHECK(R[4] == doctest::Approx(0.99 * 2.0));

  const std::vector<double> zeros(5, 0.0);
  for (double v : compute_returns(zeros, no_done, zeros, 0.99, 5)) CHECK(v == 0.0);

  const std::vector<double> r2{0, 0, 1, 0, 0};
  const std::vector<std::uint8_t> done2{0, 0, 1, 0, 0};
  const std::vector<double> big(5, 100.0);
  const auto R2 = compute_returns(r2, done2, big, 0.99, 5);
  CHECK(R2[2] == 1.0);
  CHECK(R2[0] == doctest::Approx(0.99 * 0.99));
  CHECK(R2[3] == doctest::Approx(0.99 * 0.99 * 100.0));

  // Direct summation oracle on random data.
  Rng rng(3);
  std::vector<double> rr(12), bb(12);
  std::vector<std::uint8_t> dd(12, 0);
  for (std::size_t i = 0; i < 12; ++i) {
    rr[i] = rng.uniform01();
    bb[i] = rng.uniform(-1.0, 1.0);
    dd[i] = rng.uniform01() < 0.2;
  }
  const auto got = compute_returns(rr, dd, bb, 0.9, 4);
  for (std::size_t t = 0; t < 12; ++t) {
    double expect = 0.0;
    bool stopped = false;
    std::size_t k = t;
    for (; k < std::min<std::size_t>(12, t + 4); ++k) {
      expect += std::pow(0.9, static_cast<double>(k - t)) * rr[k];
      if (dd[k]) {
        stopped = true;
        break;
      }
    }
    if (!stopped) expect += std::pow(0.9, static_cast<double>(k - t)) * bb[k - 1];
    CHECK(got[t] == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("act shapes and argument checks") {
  ActorNetwork plain(80, 0, 1);
  Rng rng(2);
  const std::vector<double> in(80, 0.1), h(kHiddenSize, 0.0);
  const auto r = act(plain, in, h, rng);
  CHECK(r.message_bits.empty());
  CHECK(r.log_probs.size() == 1);
  CHECK(r.hidden.size() == kHiddenSize);
  ActorNetwork talk(100, 5, 1);
  const auto r2 = act(talk, std::vector<double>(100, 0.1), h, rng);
  CHECK(r2.message_bits.size() == 5);
  CHECK(r2.log_probs.size() == 6);
  CHECK_THROWS_AS(act(talk, in, h, rng), std::invalid_argument);
  CHECK_THROWS_AS(act(plain, in, std::vector<double>(3, 0.0), rng), std::invalid_argument);
}

TEST_CASE("forced logits give a deterministic action") {
  ActorNetwork actor(4, 0, 3);
  auto& bias = actor.params.at("actor.head.bias").value.values;
  zero_all(actor.params);
  bias = {0.0, 0.0, 800.0, 0.0, 0.0};
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const auto r = act(actor, std::vector<double>(4, 1.0), std::vector<double>(kHiddenSize, 0.0), rng);
    CHECK(r.action == 2);
    CHECK(r.entropies[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("fresh actor is close to uniform") {
  ActorNetwork actor(100, 0, 5);
  Rng rng(6), inputs(7);
  std::array<int, kNumActions> counts{};
  std::vector<double> in(100);
  for (int k = 0; k < 10000; ++k) {
    for (auto& v : in) v = inputs.uniform01() < 0.1 ? 1.0 : 0.0;
    counts[act(actor, in, std::vector<double>(kHiddenSize, 0.0), rng).action]++;
  }
  for (int c : counts) CHECK(std::abs(c / 10000.0 - 0.2) < 0.03);
}

TEST_CASE("critic value and target") {
  CriticNetwork critic(6, 1);
  zero_all(critic.online);
  CHECK(evaluate_value(critic, std::vector<double>(6, 3.0), false) == 0.0);
  CriticNetwork c2(6, 2);
  soft_update(c2.target, c2.online, 1.0);
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  CHECK(evaluate_value(c2, x, true) == evaluate_value(c2, x, false));
  CHECK_THROWS_AS(evaluate_value(c2, std::vector<double>(5, 0.0), false), std::invalid_argument);
}

TEST_CASE("joint log-probability is additive over channels") {
  ActorNetwork actor(8, 3, 11);
  Rng rng(12);
  const std::vector<double> in{0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8};
  const std::vector<double> h(kHiddenSize, 0.05);
  const auto r = act(actor, in, h, rng);
  Tape t(false);
  const auto out = actor.forward(t, t.constant(in), t.constant(h));
  const auto logits = t.value(out.logits);
  auto logp = [&](std::size_t off, std::size_t width, std::size_t chosen) {
    double mx = -1e300;
    for (std::size_t i = 0; i < width; ++i) mx = std::max(mx, logits[off + i]);
    double z = 0.0;
    for (std::size_t i = 0; i < width; ++i) z += std::exp(logits[off + i] - mx);
    return logits[off + chosen] - mx - std::log(z);
  };
  double joint = logp(0, 5, r.action);
  for (std::size_t k = 0; k < 3; ++k) {
    joint += logp(5 + 2 * k, 2, static_cast<std::size_t>(r.message_bits[k]));
  }
  double sum = 0.0;
  for (double v : r.log_probs) sum += v;
  CHECK(sum == doctest::Approx(joint).epsilon(1e-12));
}

TEST_CASE("single-step policy gradient equals (pi - onehot) * A") {
  ActorNetwork actor(3, 0, 21);
  CriticNetwork critic(3, 22);
  zero_all(critic.online);
  TrajectoryBatch b(1, 1);
  b.inputs[0] = {0.2, -0.4, 0.9};
  b.actions[0] = 3;
  b.initial_hidden[0].assign(kHiddenSize, 0.0);
  b.final_inputs[0] = b.inputs[0];
  const double A = 1.7;  // V = 0, so the advantage is the return
  const std::vector<double> returns{A};
  Tape t(true);
  const auto losses = build_a2c_losses(t, actor, critic, b, returns, 0.0, 5);
  // Gradient w.r.t. the head bias is d loss / d logits.
  actor.params.zero_grad();
  t.backward(losses.actor);
  Tape f(false);
  const auto out = actor.forward(f, f.constant(b.inputs[0]), f.constant(b.initial_hidden[0]));
  const auto probs = f.value(ad::softmax(f, out.logits));
  const auto& g = actor.params.at("actor.head.bias").grad.values;
  for (std::size_t i = 0; i < 5; ++i) {
    const double expect = (probs[i] - (i == 3 ? 1.0 : 0.0)) * A;
    CHECK(g[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("zero advantages and entropy give a zero actor gradient") {
  Rng rng(31);
  ActorNetwork actor(4, 2, 32);
  CriticNetwork critic(4, 33);
  const auto b = random_batch(rng, 2, 5, 4, 2);
  std::vector<double> returns;
  for (const auto& in : b.inputs) returns.push_back(evaluate_value(critic, in, false));
  Tape t(true);
  const auto losses = build_a2c_losses(t, actor, critic, b, returns, 0.0, 5);
  actor.params.zero_grad();
  t.backward(losses.actor);
  for (const auto& p : actor.params) {
    for (double g : p.grad.values) CHECK(g == 0.0);
  }
}

TEST_CASE("a2c losses pass finite-difference checks") {
  Rng rng(41);
  ActorNetwork actor(6, 2, 42);
  CriticNetwork critic(6, 43);
  auto b = random_batch(rng, 2, 6, 6, 2);
  b.dones[b.at(0, 3)] = 1;
  const auto returns = compute_returns(b, critic, 0.99, 3);
  // No truncation inside the segment: finite differences see the full unroll.
  ParameterSet* a_sets[] = {&actor.params};
  const auto ra = grad_check([&](Tape& t) {
    return build_a2c_losses(t, actor, critic, b, returns, 0.05, 6).actor;
  }, a_sets);
  CHECK(ra.max_relative_error < 1e-4);
  ParameterSet* c_sets[] = {&critic.online};
  const auto rc = grad_check([&](Tape& t) {
    return build_a2c_losses(t, actor, critic, b, returns, 0.05, 6).critic;
  }, c_sets);
  CHECK(rc.max_relative_error < 1e-4);
}

TEST_CASE("critic loss is non-increasing on fixed batches with a small step") {
  int monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(static_cast<std::uint64_t>(1000 + trial));
    ActorNetwork actor(5, 0, static_cast<std::uint64_t>(trial));
    CriticNetwork critic(5, static_cast<std::uint64_t>(trial + 500));
    const auto b = random_batch(rng, 2, 5, 5, 0);
    const auto returns = compute_returns(b, critic, 0.99, 5);
    OptimizerConfig cfg;
    cfg.learning_rate = 1e-4;
    auto critic_loss = [&]() {
      Tape t(false);
      return t.scalar(build_a2c_losses(t, actor, critic, b, returns, 0.0, 5).critic);
    };
    double prev = critic_loss();
    bool ok = true;
    for (int k = 0; k < 5; ++k) {
      Tape t(true);
      const auto l = build_a2c_losses(t, actor, critic, b, returns, 0.0, 5);
      critic.online.zero_grad();
      t.backward(l.critic);
      adam_step(critic.online, cfg);
      const double now = critic_loss();
      ok = ok && now <= prev;
      prev = now;
    }
    monotone += ok ? 1 : 0;
  }
  CHECK(monotone >= 95);
}

TEST_CASE("update changes the value and soft-updates the target") {
  Rng rng(51);
  ActorNetwork actor(5, 0, 52);
  CriticNetwork critic(5, 53);
  auto b = random_batch(rng, 2, 5, 5, 0);
  for (auto& r : b.rewards) r = 1.0;
  const auto target_before = critic.target;
  const double v_before = evaluate_value(critic, b.inputs[0], false);
  const auto rep = a2c_update(actor, critic, b, A2CConfig::defaults(Scheme::None));
  CHECK(std::isfinite(rep.actor_loss));
  CHECK(rep.critic_loss > 0.0);
  CHECK(evaluate_value(critic, b.inputs[0], false) != v_before);
  CHECK_FALSE(critic.target == target_before);
  // target' = 0.99 target + 0.01 online
  const auto& t0 = target_before[0].value.values;
  const auto& t1 = critic.target[0].value.values;
  const auto& on = critic.online[0].value.values;
  CHECK(t1[0] == doctest::Approx(0.99 * t0[0] + 0.01 * on[0]).epsilon(1e-14));
}

TEST_CASE("non-finite loss raises divergence") {
  Rng rng(61);
  ActorNetwork actor(3, 0, 62);
  CriticNetwork critic(3, 63);
  auto b = random_batch(rng, 1, 2, 3, 0);
  b.rewards[0] = std::nan("");
  CHECK_THROWS_AS(a2c_update(actor, critic, b, A2CConfig::defaults(Scheme::None)), DivergenceError);
}

TEST_CASE("assemble_message") {
  const std::vector<int> bits{1, 0, 1, 0, 1};
  const std::vector<double> ues{0.2, 0.4, 0.6, 0.8, 0.5};
  const auto m = assemble_message(Scheme::UES_R, {5, 5}, bits, ues);
  REQUIRE(m);
  CHECK(m->values.size() == 10);
  CHECK(m->values[0] == 1.0);
  CHECK(m->values[5] == 0.2);
  CHECK(m->valid());
  CHECK_FALSE(assemble_message(Scheme::None, {0, 0}, {}, {}));
  CHECK_THROWS_AS(assemble_message(Scheme::UES_R, {5, 5}, std::vector<int>{1}, ues), std::invalid_argument);
  CHECK_THROWS_AS(assemble_message(Scheme::UES, {0, 10}, {}, ues), std::invalid_argument);
  const auto padded = assemble_message(Scheme::R, {5, 5}, bits, {});
  REQUIRE(padded);
  CHECK(padded->values[9] == 0.0);
  const auto r = assemble_message(Scheme::R, {10, 0}, std::vector<int>(10, 1), {});
  REQUIRE(r);
  CHECK(r->values.size() == 10);
}

}  // TEST_SUITE
