#include <gtest/gtest.h>

#include <filesystem>

#include "rednet/config.hpp"

namespace rednet {
namespace {

TEST(RunConfig, DefaultsFollowTrainingProtocol) {
  RunConfig c;
  EXPECT_EQ(c.height, 480);
  EXPECT_EQ(c.width, 640);
  EXPECT_EQ(c.num_classes, 37);
  EXPECT_EQ(c.batch_size, 5);
  EXPECT_DOUBLE_EQ(c.sgd.base_lr, 0.002);
  EXPECT_DOUBLE_EQ(c.sgd.momentum, 0.9);
  EXPECT_DOUBLE_EQ(c.sgd.weight_decay, 0.0004);
  EXPECT_DOUBLE_EQ(c.sgd.lr_decay, 0.8);
  EXPECT_EQ(c.sgd.lr_decay_every, 100);
  EXPECT_EQ(c.early_stop_patience, 50);
  EXPECT_DOUBLE_EQ(c.early_stop_rel, 1e-4);
  EXPECT_TRUE(c.pyramid);
  EXPECT_TRUE(c.median_frequency);
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, ParseCommentsAndWhitespace) {
  auto c = RunConfig::parse(
      "# comment\n"
      "model.encoder_depth = 34   # trailing\n"
      "\n"
      "  train.lr=0.05\n"
      "train.pyramid = off\n"
      "data.manifest = some dir/manifest.txt\n");
  EXPECT_EQ(c.encoder_depth, 34);
  EXPECT_DOUBLE_EQ(c.sgd.base_lr, 0.05);
  EXPECT_FALSE(c.pyramid);
  EXPECT_EQ(c.term_weights(), kPyramidOff);
  EXPECT_EQ(c.manifest, "some dir/manifest.txt");
}

TEST(RunConfig, ErrorsNameKeyAndLine) {
  try {
    RunConfig::parse("train.lr = 0.1\nmodel.depth = 50\n", "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("x.cfg:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("model.depth"), std::string::npos) << msg;
  }
  EXPECT_THROW(RunConfig::parse("train.epochs = ten\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse("no equals sign\n"), ConfigError);
  RunConfig c;
  EXPECT_THROW(c.set("train.batch_size", "1.5"), ConfigError);
  EXPECT_THROW(c.set("train.pyramid", "maybe"), ConfigError);
}

TEST(RunConfig, ValidateRejectsBadValues) {
  auto bad = [](const char* key, const char* value) {
    RunConfig c;
    c.set(key, value);
    return c;
  };
  EXPECT_THROW(bad("train.momentum", "1").validate(), ConfigError);
  EXPECT_THROW(bad("train.batch_size", "0").validate(), ConfigError);
  EXPECT_THROW(bad("model.height", "100").validate(), ConfigError);
  EXPECT_THROW(bad("model.encoder_depth", "101").validate(), ConfigError);
  EXPECT_THROW(bad("augment.scale_min", "0.5").validate(), ConfigError);
  EXPECT_THROW(bad("model.channel_divisor", "3").validate(), ConfigError);
}

TEST(RunConfig, SerializeRoundTripsEveryKey) {
  RunConfig c;
  c.encoder_depth = 34;
  c.sgd.base_lr = 0.1 + 0.2;
  c.augment.hue = 0.0123456789012345;
  c.seed = 18446744073709551615ull;
  c.val_manifest = "v.txt";
  const std::string text = c.serialize();
  for (const auto& k : RunConfig::keys()) EXPECT_NE(text.find(k + " = "), std::string::npos) << k;
  auto back = RunConfig::parse(text);
  EXPECT_EQ(back.serialize(), text);
  EXPECT_EQ(back.sgd.base_lr, c.sgd.base_lr);
  EXPECT_EQ(back.seed, c.seed);
}

TEST(RunConfig, NetworkReflectsModelKeys) {
  RunConfig c;
  c.encoder_depth = 34;
  c.num_classes = 4;
  c.height = 64;
  c.width = 96;
  c.channel_divisor = 8;
  auto n = c.network();
  EXPECT_EQ(n, NetworkConfig::resnet34(4, 64, 96).scaled(8));
}

TEST(RunConfig, ShippedConfigsValidate) {
  const std::filesystem::path dir = std::filesystem::path(REDNET_SOURCE_DIR) / "configs";
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    SCOPED_TRACE(entry.path().string());
    const RunConfig cfg = RunConfig::load(entry.path());
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(RunConfig::parse(cfg.serialize()).serialize(), cfg.serialize());
    ++seen;
  }
  EXPECT_GE(seen, 3);
}

}  // namespace
}  // namespace rednet
