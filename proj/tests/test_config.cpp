#include <gtest/gtest.h>

#include <sstream>

#include "kriggraph/config.hpp"

using namespace kriggraph;

namespace {

TrainConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  EXPECT_EQ(parse(""), TrainConfig{});
  EXPECT_EQ(parse("# only a comment\n\n   \n"), TrainConfig{});
}

TEST(Config, DocumentedDefaults) {
  TrainConfig c;
  EXPECT_EQ(c.lr, 1e-3);
  EXPECT_EQ(c.epochs_pretrain, 50u);
  EXPECT_EQ(c.epochs_finetune, 50u);
  EXPECT_EQ(c.k, 5u);
  EXPECT_EQ(c.n_prototypes, 10u);
  EXPECT_EQ(c.tau, 0.5);
  EXPECT_EQ(c.sinkhorn_eps, 0.05);
  EXPECT_EQ(c.sinkhorn_iters, 3u);
  EXPECT_EQ(c.mask_ratio, 0.25);
  EXPECT_EQ(c.idw_k, 5u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, ParsesValuesAndTrailingComments) {
  auto c = parse("lr = 0.01  # faster\nepochs_pretrain=3\nuse_contrast = false\nuse_prototype=0\nseed = 42\n");
  EXPECT_EQ(c.lr, 0.01);
  EXPECT_EQ(c.epochs_pretrain, 3u);
  EXPECT_FALSE(c.use_contrast);
  EXPECT_FALSE(c.use_prototype);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.k, TrainConfig{}.k);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse("learning_rate = 0.1\n"), ValidationError);
  EXPECT_THROW(parse("lr 0.1\n"), ValidationError);
  EXPECT_THROW(parse("lr = fast\n"), ValidationError);
  EXPECT_THROW(parse("epochs_pretrain = -1\n"), ValidationError);
  EXPECT_THROW(parse("epochs_pretrain = 2.5\n"), ValidationError);
  EXPECT_THROW(parse("use_contrast = yes\n"), ValidationError);
}

TEST(Config, ValidationCatchesOutOfRange) {
  EXPECT_THROW(parse("tau = 0\n"), ValidationError);
  EXPECT_THROW(parse("observed_ratio = 1\n"), ValidationError);
  EXPECT_THROW(parse("n_prototypes = 1\n"), ValidationError);
  EXPECT_THROW(parse("window = 0\n"), ValidationError);
  EXPECT_THROW(parse("finetune_mask_ratio = 0\n"), ValidationError);
  EXPECT_THROW(parse("sinkhorn_iters = 0\n"), ValidationError);
  EXPECT_NO_THROW(parse("lr = 0\n"));
}

TEST(Config, JsonRoundTripAndUnknownKey) {
  TrainConfig c;
  c.lr = 0.0123;
  c.use_adaptive_aug = false;
  c.seed = 987654321;
  EXPECT_EQ(config_from_json(to_json(c)), c);
  auto j = to_json(c);
  j["bogus"] = 1;
  EXPECT_THROW(config_from_json(j), ValidationError);
}

TEST(Config, DescribeRoundTripsThroughParser) {
  TrainConfig c;
  c.hidden = 17;
  c.use_prototype = false;
  const auto text = describe_config(c);
  EXPECT_EQ(parse(text), c);
  for (const auto& k : detail::config_keys()) EXPECT_NE(text.find(k.name), std::string::npos) << k.name;
}

TEST(Config, HashIsStableAndSensitive) {
  TrainConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 8u);
  b.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}
