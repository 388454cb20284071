#include <gtest/gtest.h>

#include "segaa/models/architectures.hpp"
#include "segaa/models/cascade.hpp"
#include "segaa/models/checkpoint.hpp"

using namespace segaa;
using namespace segaa::models;
using data::Target;

namespace {

std::vector<std::size_t> pooled_lengths(const nn::NetworkSpec& spec) {
  const auto shapes = nn::infer_trunk_shapes(spec);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < spec.trunk.size(); ++i) {
    if (spec.trunk[i].kind == nn::LayerKind::MaxPool1d) out.push_back(shapes[i][0]);
  }
  return out;
}

std::size_t flatten_width(const nn::NetworkSpec& spec) {
  const auto shapes = nn::infer_trunk_shapes(spec);
  for (std::size_t i = 0; i < spec.trunk.size(); ++i) {
    if (spec.trunk[i].kind == nn::LayerKind::Flatten) return shapes[i][0];
  }
  return 0;
}

std::size_t params_of(ModelKind k, std::vector<Target> t = {}) {
  nn::Network<float> net(build_model(k, std::move(t)), 1);
  return net.param_count();
}

nn::Tensor<float> random_input(const nn::NetworkSpec& spec, std::size_t batch, std::uint64_t seed) {
  nn::Shape s{batch};
  s.insert(s.end(), spec.input.begin(), spec.input.end());
  nn::Tensor<float> x(s);
  Rng rng(seed);
  for (float& v : x.data) v = static_cast<float>(rng.uniform(-2, 2));
  return x;
}

CheckpointContext sample_context() {
  CheckpointContext ctx;
  ctx.model_kind = "segaa_multi";
  ctx.targets = default_targets();
  for (std::size_t i = 0; i < dsp::kFeatureDim; ++i) {
    ctx.standardizer.mean[i] = 0.1 * static_cast<double>(i);
    ctx.standardizer.stddev[i] = 1.0 + 0.01 * static_cast<double>(i);
  }
  ctx.config = {{"seed", 7}};
  ctx.metrics = {{"emotion", 0.5}};
  return ctx;
}

std::string replace_header(const std::string& bytes, const json& h) {
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[6 + i])) << (8 * i);
  const std::string header = h.dump();
  std::string out(kCheckpointMagic, 6);
  const auto n = static_cast<std::uint32_t>(header.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
  return out + header + bytes.substr(10 + len);
}

json header_of(const std::string& bytes) {
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[6 + i])) << (8 * i);
  return json::parse(bytes.substr(10, len));
}

}  // namespace

TEST(Architectures, Segaa0Trace) {
  for (auto k : {ModelKind::Segaa0Individual, ModelKind::Segaa0Multi}) {
    const auto spec = build_model(k, is_individual(k) ? std::vector{Target::Age} : std::vector<Target>{});
    EXPECT_EQ(pooled_lengths(spec), (std::vector<std::size_t>{19, 8, 2}));
    EXPECT_EQ(flatten_width(spec), 128u);
  }
}

TEST(Architectures, SegaaTrace) {
  for (auto k : {ModelKind::SegaaIndividual, ModelKind::SegaaMulti}) {
    const auto spec = build_model(k, is_individual(k) ? std::vector{Target::Gender} : std::vector<Target>{});
    EXPECT_EQ(pooled_lengths(spec), (std::vector<std::size_t>{21, 10, 5}));
    EXPECT_EQ(flatten_width(spec), 320u);
  }
}

TEST(Architectures, MlpEmotionParameterCount) {
  const std::size_t expected = 42 * 2048 + 2048 + 2048 * 1024 + 1024 + 1024 * 512 + 512 + 512 * 64 + 64 + 64 * 6 + 6;
  EXPECT_EQ(expected, 2744262u);
  EXPECT_EQ(params_of(ModelKind::MlpIndividual, {Target::Emotion}), expected);
}

TEST(Architectures, HeadDeltasMatchHeadSizes) {
  const std::size_t mlp_e = params_of(ModelKind::MlpIndividual, {Target::Emotion});
  EXPECT_EQ(params_of(ModelKind::MlpIndividual, {Target::Gender}), mlp_e - 390 + 65);
  EXPECT_EQ(params_of(ModelKind::MlpMulti), mlp_e + 65 + 390);

  const std::size_t seg_e = params_of(ModelKind::SegaaIndividual, {Target::Emotion});
  EXPECT_EQ(params_of(ModelKind::SegaaMulti), seg_e + 130 + 390);
  const std::size_t g0_e = params_of(ModelKind::Segaa0Individual, {Target::Emotion});
  EXPECT_EQ(params_of(ModelKind::Segaa0Multi), g0_e + 66 + 198);
}

TEST(Architectures, MultiAndIndividualShareTrunk) {
  for (Family f : {Family::Mlp, Family::Segaa0, Family::Segaa}) {
    const auto multi = build_model(multi_kind(f));
    for (Target t : default_targets()) {
      const auto ind = build_model(individual_kind(f), {t});
      EXPECT_EQ(ind.trunk, multi.trunk);
      EXPECT_EQ(ind.input, multi.input);
      ASSERT_EQ(ind.heads.size(), 1u);
    }
    EXPECT_EQ(multi.heads.size(), 3u);
  }
}

TEST(Architectures, HeadActivations) {
  const auto mlp = build_model(ModelKind::MlpMulti);
  EXPECT_EQ(mlp.heads[1].units, 1u);
  EXPECT_EQ(mlp.heads[1].activation, nn::Activation::Sigmoid);
  for (auto k : {ModelKind::Segaa0Multi, ModelKind::SegaaMulti}) {
    const auto s = build_model(k);
    EXPECT_EQ(s.heads[0].units, 6u);
    EXPECT_EQ(s.heads[1].units, 2u);
    EXPECT_EQ(s.heads[2].units, 6u);
    for (const auto& h : s.heads) EXPECT_EQ(h.activation, nn::Activation::Softmax);
  }
}

TEST(Architectures, SoftmaxRowsSumToOne) {
  for (auto k : kAllKinds) {
    const auto spec = build_model(k, is_individual(k) ? std::vector{Target::Emotion} : std::vector<Target>{});
    nn::Network<float> net(spec, 3);
    const auto& out = net.forward(random_input(spec, 5, 9), nn::Mode::Infer);
    for (std::size_t h = 0; h < spec.heads.size(); ++h) {
      if (spec.heads[h].activation != nn::Activation::Softmax) continue;
      const std::size_t u = spec.heads[h].units;
      for (std::size_t r = 0; r < 5; ++r) {
        double sum = 0;
        for (std::size_t j = 0; j < u; ++j) sum += out[h].data[r * u + j];
        EXPECT_NEAR(sum, 1.0, 1e-6) << to_string(k);
      }
    }
  }
}

TEST(Architectures, InvalidRequests) {
  EXPECT_THROW(build_model(ModelKind::SegaaIndividual), UsageError);
  EXPECT_THROW(build_model(ModelKind::SegaaIndividual, {Target::Age, Target::Gender}), UsageError);
  EXPECT_THROW(build_model(ModelKind::SegaaMulti, {Target::Age, Target::Age}), UsageError);
  EXPECT_THROW(build_model(ModelKind::Segaa0Multi, {}, 10), UsageError);
  try {
    parse_model_kind("resnet");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("segaa_multi"), std::string::npos);
  }
  for (auto k : kAllKinds) EXPECT_EQ(parse_model_kind(to_string(k)), k);
}

TEST(Architectures, DefaultSchedules) {
  const auto mlp = default_schedule(Family::Mlp);
  EXPECT_EQ(mlp.optimizer, optim::OptimizerKind::Sgd);
  EXPECT_EQ(mlp.batch_size, 32u);
  EXPECT_FALSE(mlp.early_stopping);
  EXPECT_FALSE(mlp.plateau);
  const auto g0 = default_schedule(Family::Segaa0);
  EXPECT_EQ(g0.optimizer, optim::OptimizerKind::Adam);
  EXPECT_EQ(g0.batch_size, 32u);
  const auto seg = default_schedule(Family::Segaa);
  EXPECT_EQ(seg.optimizer, optim::OptimizerKind::Nadam);
  EXPECT_EQ(seg.batch_size, 16u);
  EXPECT_EQ(seg.epochs, 200u);
  EXPECT_TRUE(seg.early_stopping);
  EXPECT_EQ(seg.early_stop_patience, 5u);
  EXPECT_TRUE(seg.plateau);
  EXPECT_EQ(seg.plateau_patience, 3u);
  EXPECT_DOUBLE_EQ(seg.plateau_factor, 0.5);
  EXPECT_DOUBLE_EQ(seg.min_lr, 1e-6);
}

TEST(Cascade, StageWidths) {
  CascadeSpec egA;
  EXPECT_EQ(stage_input_width(egA, 0), 42u);
  EXPECT_EQ(stage_input_width(egA, 1), 48u);
  EXPECT_EQ(stage_input_width(egA, 2), 44u);
  CascadeSpec gae{{Target::Gender, Target::Age, Target::Emotion}};
  EXPECT_EQ(stage_input_width(gae, 1), 44u);
  EXPECT_EQ(stage_input_width(gae, 2), 48u);
  CascadeSpec all{{Target::Emotion, Target::Gender, Target::Age}, ModelKind::SegaaIndividual, true};
  EXPECT_EQ(stage_input_width(all, 2), 50u);
  EXPECT_EQ(all.name(), "cascade_segaa_emotion-gender-age_all");
}

TEST(Cascade, StageSpecsTrace) {
  const auto stages = build_cascade(CascadeSpec{});
  EXPECT_EQ(stages[1].input, (nn::Shape{48, 1}));
  EXPECT_EQ(pooled_lengths(stages[1]), (std::vector<std::size_t>{24, 12, 6}));
  EXPECT_EQ(stages[2].name, "cascade_segaa_emotion-gender-age_stage3");
  EXPECT_EQ(stages[2].heads.at(0).name, "age");
  const auto mlp = build_cascade({{Target::Age, Target::Emotion, Target::Gender}, ModelKind::MlpIndividual});
  EXPECT_EQ(mlp[2].input, (nn::Shape{48}));
}

TEST(Cascade, ParseOrder) {
  EXPECT_EQ(parse_order("gender>age>emotion"), (std::array{Target::Gender, Target::Age, Target::Emotion}));
  EXPECT_EQ(parse_order("age,emotion,gender"), (std::array{Target::Age, Target::Emotion, Target::Gender}));
  EXPECT_THROW(parse_order("age,age,gender"), UsageError);
  EXPECT_THROW(parse_order("age,gender"), UsageError);
  EXPECT_THROW(parse_order("age,gender,emotion,age"), UsageError);
  EXPECT_THROW((CascadeSpec{{Target::Age, Target::Gender, Target::Emotion}, ModelKind::SegaaMulti}.validate()),
               UsageError);
}

TEST(Checkpoint, BitwiseRoundTrip) {
  const auto spec = build_model(ModelKind::SegaaMulti);
  nn::Network<float> net(spec, 42);
  const auto ctx = sample_context();
  const std::string bytes = encode_checkpoint(net, ctx);
  auto loaded = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(loaded.network, loaded.context), bytes);
  EXPECT_EQ(loaded.network.spec().heads.size(), 3u);
  EXPECT_EQ(loaded.context.targets, ctx.targets);
  EXPECT_EQ(loaded.context.standardizer.mean, ctx.standardizer.mean);
  EXPECT_EQ(loaded.context.config, ctx.config);

  const auto x = random_input(spec, 3, 5);
  const auto a = net.forward(x, nn::Mode::Infer);
  const auto b = loaded.network.forward(x, nn::Mode::Infer);
  for (std::size_t h = 0; h < a.size(); ++h) EXPECT_EQ(a[h].data, b[h].data);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "segaa_test_ckpt";
  std::filesystem::remove_all(dir);
  nn::Network<float> net(build_model(ModelKind::MlpIndividual, {Target::Age}), 2);
  save_checkpoint(dir / "m.segaa", net, sample_context());
  auto loaded = load_checkpoint(dir / "m.segaa");
  EXPECT_EQ(loaded.network.snapshot(), net.snapshot());
  EXPECT_THROW(load_checkpoint(dir / "missing.segaa"), DataError);
}

TEST(Checkpoint, CorruptionIsDetected) {
  nn::Network<float> net(build_model(ModelKind::SegaaIndividual, {Target::Gender}), 4);
  const std::string bytes = encode_checkpoint(net, sample_context());

  auto expect_error = [](const std::string& b, const std::string& fragment) {
    try {
      decode_checkpoint(b);
      ADD_FAILURE() << "accepted corrupt checkpoint (" << fragment << ")";
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };

  std::string bad = bytes;
  bad[0] = 'X';
  expect_error(bad, "magic mismatch");
  expect_error(bytes.substr(0, 20), "truncated checkpoint header");
  expect_error(bytes.substr(0, bytes.size() - 1), "truncated checkpoint payload");
  expect_error(bytes + "x", "trailing bytes");

  json h = header_of(bytes);
  h["layers"].erase(h["layers"].size() - 1);
  expect_error(replace_header(bytes, h), "layer table does not match");

  h = header_of(bytes);
  h["layers"][0]["name"] = "renamed";
  expect_error(replace_header(bytes, h), "layer table inconsistent at entry");

  h = header_of(bytes);
  h["format_version"] = 99;
  expect_error(replace_header(bytes, h), "unsupported checkpoint version");

  h = header_of(bytes);
  h["label_schema"]["emotions"][0] = "rage";
  expect_error(replace_header(bytes, h), "label schema");

  h = header_of(bytes);
  h.erase("standardizer");
  expect_error(replace_header(bytes, h), "malformed checkpoint header");
}
