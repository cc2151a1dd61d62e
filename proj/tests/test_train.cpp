// Copyright 2026 The mores-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "mores/errors.hpp"
#include "mores/train.hpp"
#include "support.hpp"

using namespace mores;
using mores::test::TempDir;
using mores::test::tiny_hp;

namespace {

std::map<std::string, std::vector<double>> snapshot(const ModelParams& m) {
  std::map<std::string, std::vector<double>> out;
  visit_params(m, [&](const std::string& name, const Tensor& t, ParamGroup) {
    out[name].assign(t.values().begin(), t.values().end());
  });
  return out;
}

std::map<std::string, ParamGroup> groups(const ModelParams& m) {
  std::map<std::string, ParamGroup> out;
  visit_params(m, [&](const std::string& name, const Tensor&, ParamGroup g) { out[name] = g; });
  return out;
}

}  // namespace

TEST_CASE("pointwise loss values") {
  CHECK(std::abs(pointwise_loss(Tensor::scalar(0.0), 1.0).item() - std::log(2.0)) <= 1e-15);
  CHECK(std::abs(pointwise_loss(Tensor::scalar(0.0), 0.0).item() - std::log(2.0)) <= 1e-15);
  CHECK(std::abs(pointwise_loss(Tensor::scalar(10.0), 1.0).item() - std::log1p(std::exp(-10.0))) <=
        1e-18);
}

TEST_CASE("freeze mode names and groups") {
  CHECK(parse_freeze_mode("adapt-interaction") == FreezeMode::adapt_interaction);
  CHECK(std::string(freeze_mode_name(FreezeMode::adapt_representation)) == "adapt-representation");
  CHECK_THROWS_AS(parse_freeze_mode("all"), ConfigError);
  CHECK(is_frozen(FreezeMode::adapt_interaction, ParamGroup::doc_representation));
  CHECK(is_frozen(FreezeMode::adapt_interaction, ParamGroup::query_representation));
  CHECK_FALSE(is_frozen(FreezeMode::adapt_interaction, ParamGroup::scoring_head));
  CHECK(is_frozen(FreezeMode::adapt_representation, ParamGroup::interaction));
  CHECK(is_frozen(FreezeMode::adapt_representation, ParamGroup::scoring_head));
  CHECK_FALSE(is_frozen(FreezeMode::none, ParamGroup::interaction));
  CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
  CHECK_THROWS_AS(parse_optimizer("lbfgs"), ConfigError);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  ModelParams m = synthesize_model(tiny_hp(), 1);
  CHECK_THROWS_AS(train(m, std::vector<ToyExample>{}, TrainConfig{}), ConfigError);
}

TEST_CASE("toy generator rules") {
  const auto data = gen_toy_data(24, 3, 6, 40, 5);
  REQUIRE(data.size() == 40);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    CHECK(ex.label == (i % 2 == 0 ? 1.0 : 0.0));
    CHECK(ex.query.size() == 3);
    CHECK(ex.doc.size() == 6);
    const std::set<TokenId> q(ex.query.begin(), ex.query.end());
    CHECK(q.size() == 3);
    std::set<TokenId> shared;
    for (TokenId t : ex.doc) {
      CHECK(t >= kReservedTokens);
      CHECK(t < 24);
      if (q.count(t)) shared.insert(t);
    }
    if (ex.label == 1.0) {
      CHECK(shared.size() >= 2);
    } else {
      CHECK(shared.empty());
    }
  }
  CHECK_THROWS_AS(gen_toy_data(9, 3, 6, 4, 1), ConfigError);
  CHECK_THROWS_AS(gen_toy_data(100, 5, 2, 4, 1), ConfigError);

  const auto ranking = gen_toy_ranking(100, 2, 8, 4, 5, 6);
  REQUIRE(ranking.size() == 4);
  for (const auto& q : ranking) {
    CHECK(q.candidates.size() == 5);
    int relevant = 0;
    for (const auto& [id, grade] : q.judged) relevant += grade;
    CHECK(relevant == 1);
  }
}

TEST_CASE("gradient check on the tiny model") {
  ModelParams m = synthesize_model(tiny_hp(), 2, 0.5);
  const ToyExample ex{{5, 6, 7}, {8, 9, 5, 10}, 1.0};
  const GradCheckReport full = grad_check(m, ex, 1e-5, 1e-6);
  CHECK(full.passed);
  REQUIRE(full.groups.size() == 4);
  for (const auto& g : full.groups) {
    CAPTURE(param_group_name(g.group));
    CHECK(g.max_error < 1e-6);
    CHECK(g.elements > 0);
  }
  const GradCheckReport frozen = grad_check(m, ex, 1e-5, 1e-6, FreezeMode::adapt_interaction);
  CHECK(frozen.passed);
  CHECK(frozen.groups[0].frozen);
  CHECK(frozen.groups[0].max_error == 0.0);
  CHECK_FALSE(frozen.groups[2].frozen);
}

TEST_CASE("frozen tensors stay bitwise unchanged") {
  const auto data = gen_toy_data(24, 2, 6, 64, 3);
  for (auto mode : {FreezeMode::adapt_interaction, FreezeMode::adapt_representation}) {
    ModelParams m = synthesize_model(tiny_hp(), 4, 0.2);
    const auto before = snapshot(m);
    TrainConfig cfg;
    cfg.steps = 10;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-2;
    cfg.freeze = mode;
    train(m, data, cfg);
    const auto after = snapshot(m);
    std::size_t changed = 0;
    for (const auto& [name, group] : groups(m)) {
      if (is_frozen(mode, group)) {
        CHECK_MESSAGE(after.at(name) == before.at(name), name);
      } else if (after.at(name) != before.at(name)) {
        ++changed;
      }
    }
    CHECK(changed > 0);
  }
}

TEST_CASE("training is deterministic and writes a loss trace") {
  TempDir dir("train");
  const auto data = gen_toy_data(24, 2, 6, 32, 8);
  TrainConfig cfg;
  cfg.steps = 6;
  cfg.batch_size = 8;
  ModelParams a = synthesize_model(tiny_hp(), 5, 0.2);
  ModelParams b = a;
  const auto ra = train(a, data, cfg);
  const auto rb = train(b, data, cfg);
  CHECK(ra.loss_trace == rb.loss_trace);
  CHECK(ra.loss_trace.size() == 6);
  CHECK(snapshot(a) == snapshot(b));

  cfg.optimizer = OptimizerKind::sgd;
  ModelParams c = synthesize_model(tiny_hp(), 5, 0.2);
  train(c, data, cfg);
  CHECK(snapshot(c) != snapshot(a));

  write_loss_trace(dir / "loss.csv", ra.loss_trace);
  std::ifstream in(dir / "loss.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "step,loss");
  CHECK(first.rfind("1,", 0) == 0);
  CHECK(window_mean(std::vector<double>{1, 2, 3, 4}, 1, 2) == 2.5);
}
