#include "oracles.hpp"
#include "relightkit/models.hpp"

#include <doctest.h>

#include <cmath>

using namespace relightkit;

namespace {

template <typename S>
nn::Tensor<S> random_tensor(int c, int h, int w, std::uint64_t seed, double scale = 1.0) {
  nn::Rng rng(seed);
  nn::Tensor<S> t(c, h, w);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = static_cast<S>(scale * nn::uniform(rng, -1, 1));
  return t;
}

std::vector<oracle::Layer> as_oracle(const std::vector<ConvLayerSpec>& layers) {
  std::vector<oracle::Layer> out;
  for (const auto& l : layers) out.push_back({l.kernel, l.stride, l.padding, l.out_channels});
  return out;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("receptive field examples") {
    CHECK(receptive_field(DiscriminatorSpec::default_layers()) == 70);
    CHECK(receptive_field({{1, 1, 0, 8, Norm::none, Activation::none}}) == 1);
    CHECK(receptive_field({{3, 1, 1, 8, Norm::none, Activation::relu}, {3, 1, 1, 8, Norm::none, Activation::none}}) ==
          5);
    CHECK(oracle::receptive_field(oracle::patch_discriminator()) == 70);
    for (int base : {8, 16, 64})
      CHECK(receptive_field(DiscriminatorSpec::default_layers(base)) ==
            oracle::receptive_field(as_oracle(DiscriminatorSpec::default_layers(base))));
    CHECK_THROWS(receptive_field({}));
  }

  TEST_CASE("discriminator map shape follows the recurrence") {
    const DiscriminatorSpec spec;
    CHECK(discriminator_output_shape(spec, 256, 256) == MapShape{30, 30});
    CHECK(oracle::propagate(256, oracle::patch_discriminator()) == 30);
    for (int n : {64, 70, 100, 128})
      CHECK(discriminator_output_shape(spec, n, n).height == oracle::propagate(n, oracle::patch_discriminator()));
    CHECK(discriminator_output_shape(spec, 64, 64) == MapShape{6, 6});
    CHECK_THROWS(discriminator_output_shape(spec, 8, 8));
  }

  TEST_CASE("70x70 pair: the centre unit sees the whole input") {
    DiscriminatorSpec spec;
    spec.layers = DiscriminatorSpec::default_layers(4);
    PatchDiscriminator<float> d(spec, 3);
    const auto x = random_tensor<float>(3, 70, 70, 1);
    const auto y = random_tensor<float>(3, 70, 70, 2);
    const auto logits = d.forward(x, y);
    const int side = oracle::propagate(70, oracle::patch_discriminator());
    CHECK(logits.channels == 1);
    CHECK(logits.height == side);
    CHECK(logits.width == side);
    CHECK(receptive_field(spec.layers) >= 70);
    // a corner perturbation reaches the centre unit
    auto y2 = y;
    y2(0, 0, 0) += 1.0f;
    y2(2, 69, 69) -= 1.0f;
    const auto l2 = d.forward(x, y2);
    CHECK(l2(0, side / 2, side / 2) != logits(0, side / 2, side / 2));
  }

  TEST_CASE("generator spec arithmetic") {
    GeneratorSpec s;
    CHECK(s.stages() == 8);
    CHECK(s.resolved_channels() == std::vector<int>{64, 128, 256, 512, 512, 512, 512, 512});
    s.image_size = 64;
    CHECK(s.stages() == 6);
    s.image_size = 100;
    CHECK_THROWS(s.validate());
    CHECK_THROWS(Generator<float>(s, 1));
    CHECK(GeneratorSpec::scaled(64, 16, 64).resolved_channels() == std::vector<int>{16, 32, 64, 64, 64, 64});
  }

  TEST_CASE("generator output shape and range") {
    for (int size : {64, 256}) {
      const auto spec = GeneratorSpec::scaled(size, 4, 16);
      Generator<float> g(spec, 1);
      const auto x = random_tensor<float>(3, size, size, 7);
      const auto y = g.forward(x);
      CHECK(y.same_shape(x));
      CHECK(y.data.cwiseAbs().maxCoeff() <= 1.0f);
      CHECK_THROWS(g.forward(random_tensor<float>(3, size / 2, size / 2, 1)));
    }
  }

  TEST_CASE("default generator on a 256 input") {
    Generator<float> g(GeneratorSpec{}, 1);
    const auto x = random_tensor<float>(3, 256, 256, 2);
    const auto y = g.forward(x);
    CHECK(y.same_shape(x));
    CHECK(y.data.cwiseAbs().maxCoeff() <= 1.0f);
  }

  TEST_CASE("inference determinism and stochastic mode") {
    auto spec = GeneratorSpec::scaled(32, 4, 16);
    Generator<float> g(spec, 5);
    const auto x = random_tensor<float>(3, 32, 32, 9);
    nn::Rng r1(1), r2(2);
    CHECK(g.forward(x, {.dropout_rng = &r1}).data == g.forward(x, {.dropout_rng = &r2}).data);
    g.set_stochastic_inference(true);
    nn::Rng r3(3), r4(4);
    const auto a = g.forward(x, {.dropout_rng = &r3});
    const auto b = g.forward(x, {.dropout_rng = &r4});
    CHECK((a.data - b.data).norm() > 0);
  }

  TEST_CASE("dropout sits in the first decoder blocks only") {
    auto spec = GeneratorSpec::scaled(64, 4, 16);
    Generator<float> g(spec, 1);
    const auto& dec = g.decoders();
    REQUIRE(dec.size() == 6);
    CHECK(dec[0].dropout);
    CHECK(dec[1].dropout);
    CHECK(dec[2].dropout);
    CHECK_FALSE(dec[3].dropout);
    CHECK_FALSE(dec[5].dropout);
    CHECK(dec[5].post == Activation::tanh);
    CHECK(dec[5].norm == Norm::none);
    CHECK(g.encoders()[0].norm == Norm::none);
    CHECK(g.encoders()[0].pre == Activation::none);
    CHECK(g.encoders()[5].norm == Norm::none);
    CHECK(g.encoders()[2].norm == Norm::instance);
  }

  TEST_CASE("both the bottleneck and the skips influence the output") {
    Generator<float> g(GeneratorSpec::scaled(32, 4, 16), 11);
    const auto x = random_tensor<float>(3, 32, 32, 12);
    const auto base = g.forward(x);
    const auto no_bottleneck = g.forward(x, {.zero_bottleneck = true});
    const auto no_skips = g.forward(x, {.zero_skips = true});
    CHECK((base.data - no_bottleneck.data).cwiseAbs().maxCoeff() > 0);
    CHECK((base.data - no_skips.data).cwiseAbs().maxCoeff() > 0);
  }

  TEST_CASE("initialisation is a function of the seed") {
    const auto spec = GeneratorSpec::scaled(16, 4, 8);
    Generator<float> a(spec, 42), b(spec, 42), c(spec, 43);
    const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
    REQUIRE(pa.size() == pb.size());
    bool differs = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i]->name == pb[i]->name);
      CHECK(pa[i]->value == pb[i]->value);
      differs = differs || pa[i]->value != pc[i]->value;
    }
    CHECK(differs);
    CHECK(a.parameter_count() == c.parameter_count());
  }

  TEST_CASE("generator parameter count from the layer table") {
    const auto spec = GeneratorSpec::scaled(64, 16, 64);
    const auto ch = spec.resolved_channels();
    long expected = 0;
    int in = 3;
    for (int c : ch) {
      expected += static_cast<long>(c) * in * 16 + c;
      in = c;
    }
    const int n = static_cast<int>(ch.size());
    for (int k = 0; k < n; ++k) {
      const int level = n - 1 - k;
      const int cin = k == 0 ? ch[n - 1] : 2 * ch[level];
      const int cout = level == 0 ? 3 : ch[level - 1];
      expected += static_cast<long>(cin) * cout * 16 + cout;
    }
    Generator<float> g(spec, 1);
    CHECK(static_cast<long>(g.parameter_count()) == expected);
  }

  TEST_CASE("classifier parameter count and logits") {
    const ClassifierSpec spec;
    const long expected = oracle::classifier_parameters({16, 32, 64, 128}, 3, 8);
    CHECK(expected == 98472);
    Classifier<float> c(spec, 1);
    CHECK(static_cast<long>(c.parameter_count()) == expected);
    const auto logits = c.forward(random_tensor<float>(3, 256, 256, 1));
    CHECK(logits.rows() == 8);
    CHECK(logits.cols() == 1);
    CHECK_THROWS(c.forward(random_tensor<float>(3, 64, 64, 1)));
    ClassifierSpec bad;
    bad.channels = {};
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("discriminator response") {
    nn::Tensor<double> zeros(1, 3, 3);
    CHECK(discriminator_response(zeros) == doctest::Approx(0.5).epsilon(1e-15));
    nn::Tensor<double> big(1, 2, 2);
    big.data.setConstant(60.0);
    CHECK(discriminator_response(big) == doctest::Approx(1.0).epsilon(1e-15));
    const auto mixed = random_tensor<double>(1, 5, 4, 3, 4.0);
    double sum = 0;
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 4; ++x) sum += 1.0 / (1.0 + std::exp(-mixed(0, y, x)));
    CHECK(discriminator_response(mixed) == doctest::Approx(sum / 20).epsilon(1e-14));
    const double r = discriminator_response(mixed);
    CHECK(r > 0);
    CHECK(r < 1);
  }

  TEST_CASE("discriminator input contract") {
    DiscriminatorSpec spec;
    spec.layers = DiscriminatorSpec::default_layers(4);
    PatchDiscriminator<float> d(spec, 1);
    CHECK_THROWS(d.forward(random_tensor<float>(3, 64, 64, 1), random_tensor<float>(3, 32, 32, 1)));
    CHECK(d.forward(random_tensor<float>(3, 64, 64, 1), random_tensor<float>(3, 64, 64, 2)).height == 6);
    DiscriminatorSpec bad;
    bad.layers[4].out_channels = 2;
    CHECK_THROWS(bad.validate());
    bad = DiscriminatorSpec{};
    bad.layers[0].stride = 0;
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("spec text round trip and hashes") {
    auto g = GeneratorSpec::scaled(64, 16, 64);
    g.dropout_decoder_blocks = 2;
    const auto g2 = generator_spec_from(to_key_values(g));
    CHECK(g2.image_size == 64);
    CHECK(g2.resolved_channels() == g.resolved_channels());
    CHECK(g2.dropout_decoder_blocks == 2);
    CHECK(spec_hash(g2) == spec_hash(g));
    auto g3 = g;
    g3.stochastic_inference = true;
    CHECK(spec_hash(g3) == spec_hash(g));
    CHECK(spec_hash(GeneratorSpec{}) != spec_hash(g));

    DiscriminatorSpec d;
    d.layers = DiscriminatorSpec::default_layers(8);
    CHECK(discriminator_spec_from(to_key_values(d)).layers == d.layers);
    CHECK(spec_hash(d) != spec_hash(DiscriminatorSpec{}));

    ClassifierSpec c;
    c.input_size = 64;
    CHECK(classifier_spec_from(to_key_values(c)).channels == c.channels);
    CHECK(spec_hash(classifier_spec_from(to_key_values(c))) == spec_hash(c));
  }
}
