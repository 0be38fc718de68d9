#include <gtest/gtest.h>

#include "glia/config.hpp"
#include "glia/errors.hpp"

using namespace glia;

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  const auto text = render_config(c);
  EXPECT_EQ(parse_config(text), c);
  EXPECT_EQ(render_config(parse_config(text)), text);
}

TEST(Config, NonDefaultRoundTrip) {
  RunConfig c;
  c.model = GliaNetConfig::paper_scale();
  c.model.glia.insertion_points = {1, 5, 11};
  c.model.glia.mlp_depth = 2;
  c.model.glia.lambda_init = 0.123456789012345;
  c.model.glia.glr_source = GlrSource::post_lgf;
  c.model.glia.ablation = AdapterAblation::lgf_only;
  c.model.vit.gelu = GeluMode::exact_erf;
  c.model.glia.gelu = GeluMode::exact_erf;
  c.model.grid.mode = SamplingMode::random;
  c.model.grid.seed = 18446744073709551615ull;
  c.model.guidance = GuidanceMode::semantic_only;
  c.train.learning_rate = 1.0 / 3.0;
  c.train.loss = LossKind::smooth_l1;
  c.train.precision = Precision::f64;
  c.train.init_head_bias = false;
  const auto text = render_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(render_config(back), text);
}

TEST(Config, CommentsBlankLinesAndPartialFiles) {
  const auto c = parse_config("# toy run\n\ntrain.epochs = 3  # short\nglia.ablation=glr_only\n");
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.model.glia.ablation, AdapterAblation::glr_only);
  EXPECT_EQ(c.model.vit, ViTConfig::toy());
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("train.epoch = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("train.epochs = three\n"), ConfigError);
  EXPECT_THROW(parse_config("train.epochs\n"), ConfigError);
  EXPECT_THROW(parse_config("train.epochs = 1\ntrain.epochs = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("model.guidance = sideways\n"), ConfigError);
  EXPECT_THROW(parse_config("train.split_fraction = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config("glia.d_latent = 64\n"), ConfigError);
  EXPECT_THROW(parse_model_config("train.epochs = 1\n"), ConfigError);
}

TEST(Config, WidthFollowsBackbone) {
  const auto c = parse_config("vit.d_model = 128\nvit.n_heads = 8\nglia.d_latent = 32\n");
  EXPECT_EQ(c.model.glia.d_model, 128u);
}

TEST(Config, ModelSubsetRoundTrip) {
  auto m = GliaNetConfig::toy();
  m.guidance = GuidanceMode::detail_only;
  EXPECT_EQ(parse_model_config(render_model_config(m)), m);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/run.cfg"), IoError);
}
