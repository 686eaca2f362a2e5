#include <doctest.h>

#include <cmath>

#include "spectra/error.hpp"
#include "spectra/synth.hpp"
#include "spectra/trainer.hpp"
#include "test_support.hpp"

using namespace spectra;

namespace {

std::vector<FieldPair> small_dataset(std::size_t n, std::size_t size = 16, std::size_t factor = 4,
                                     std::uint64_t seed = 1) {
  SynthSpec spec;
  spec.height = size;
  spec.width = size;
  spec.seed = seed;
  return make_dataset(spec, n, factor);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected spectra::Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("model initialization") {
  CHECK(code_of([] { init_model(4, 4, 1); }) == ErrorCode::EvenKernel);
  const auto a = init_model(4, 5, 3), b = init_model(4, 5, 3), c = init_model(4, 5, 4);
  CHECK(a.parameter_count() == 3 * 3 * 25 + 3);
  for (std::size_t i = 0; i < a.parameter_count(); ++i) CHECK(a.parameters()[i] == b.parameters()[i]);
  CHECK(test::max_abs_diff(a.parameters(), c.parameters()) > 0.0);

  const auto id = init_model(4, 5, 3, 3, 3, 0.0);
  const auto data = small_dataset(1);
  const auto out = forward(id, data[0].input);
  const auto up = upsample_nearest(data[0].input, 4);
  for (std::size_t i = 0; i < out.values().size(); ++i) CHECK(out.values()[i] == up.values()[i]);
  CHECK(out.channel_names() == data[0].input.channel_names());
  CHECK(out.height() == 16);
  CHECK(out.dx() == doctest::Approx(data[0].target.dx()));
}

TEST_CASE("forward map") {
  const auto data = small_dataset(1);
  const auto& x = data[0].input;

  SUBCASE("constant input through identity") {
    const auto c = make_field(std::vector<double>(3 * 16, 2.5), 4, 4, 4.0, {"u", "v", "t2m"});
    const auto out = forward(init_model(4, 3, 1, 3, 3, 0.0), c);
    for (double v : out.values()) CHECK(v == doctest::Approx(2.5));
  }
  SUBCASE("linear when biases vanish") {
    const auto m = init_model(4, 5, 9, 3, 3, 0.3);
    const double alpha = -1.7;
    const auto a = forward(m, test::scaled(x, alpha));
    const auto b = test::scaled(forward(m, x), alpha);
    CHECK(test::max_abs_diff(a.values(), b.values()) < 1e-12);
  }
  SUBCASE("changing one tap adds the shifted upsampled input slice") {
    auto m = init_model(4, 5, 9, 3, 3, 0.3);
    const auto before = forward(m, x);
    const std::size_t o = 1, c = 2, a = 0, b = 3;
    const double delta = m.weight(o, c, a, b);
    m.weight(o, c, a, b) += delta;
    const auto after = forward(m, x);
    const auto up = upsample_nearest(x, 4);
    const std::size_t h = 16, w = 16, r = 2;
    for (std::size_t oc = 0; oc < 3; ++oc) {
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          const double diff = after.at(oc, i, j) - before.at(oc, i, j);
          const double want =
              oc == o ? delta * up.at(c, (i + a + h - r) % h, (j + b + w - r) % w) : 0.0;
          CHECK(std::abs(diff - want) < 1e-12);
        }
      }
    }
  }
  SUBCASE("channel mismatch") {
    const auto m = init_model(4, 5, 1, 2, 2);
    CHECK(code_of([&] { forward(m, x); }) == ErrorCode::ChannelMismatch);
  }
}

TEST_CASE("backward pass") {
  const auto data = small_dataset(1);
  const auto& x = data[0].input;
  const auto m = init_model(4, 3, 5, 3, 3, 0.1);
  const auto out = forward(m, x);

  SUBCASE("zero output gradient") {
    const auto zero = test::scaled(out, 0.0);
    for (double g : backward(m, x, zero)) CHECK(g == 0.0);
  }
  SUBCASE("single-cell gradient picks out the local patch") {
    std::vector<double> gv(out.values().size(), 0.0);
    const std::size_t o = 2, i0 = 5, j0 = 14, h = 16, w = 16, k = 3, r = 1;
    gv[o * h * w + i0 * w + j0] = 1.0;
    const auto g = backward(m, x, test::scaled(make_field(gv, h, w, out.dx(), out.channel_names()), 1.0));
    const auto up = upsample_nearest(x, 4);
    for (std::size_t oc = 0; oc < 3; ++oc) {
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t a = 0; a < k; ++a) {
          for (std::size_t b = 0; b < k; ++b) {
            const double want = oc == o ? up.at(c, (i0 + a + h - r) % h, (j0 + b + w - r) % w) : 0.0;
            CHECK(g[m.kernel_offset(oc, c) + a * k + b] == doctest::Approx(want));
          }
        }
      }
      CHECK(g[m.bias_offset() + oc] == (oc == o ? 1.0 : 0.0));
    }
  }
  SUBCASE("shape mismatch") {
    CHECK(code_of([&] { backward(m, x, test::random_field(8, 8, 1, 1.0, {"u", "v", "t2m"})); }) ==
          ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("composite-loss parameter gradient matches central differences") {
  const auto data = small_dataset(2, 32, 4);  // 8x8 -> 32x32
  for (double lambda : {0.0, 0.1, 1.0}) {
    for (auto base : {BaseLoss::L2, BaseLoss::L1}) {
      LossConfig cfg;
      cfg.lambda = lambda;
      cfg.base = base;
      cfg.epsilon = 1e-8;
      auto m = init_model(4, 3, 17, 3, 3, 0.05);
      std::vector<double> grad;
      dataset_loss(m, data, cfg, &grad);
      double err = 0.0, scale = 0.0;
      auto params = m.parameters();
      for (std::size_t p = 0; p < params.size(); ++p) {
        const double x = params[p];
        const double h = 1e-5 * std::max(std::abs(x), 1.0);
        params[p] = x + h;
        const double up = dataset_loss(m, data, cfg, nullptr);
        params[p] = x - h;
        const double down = dataset_loss(m, data, cfg, nullptr);
        params[p] = x;
        const double fd = (up - down) / (2.0 * h);
        err = std::max(err, std::abs(fd - grad[p]));
        scale = std::max(scale, std::abs(fd));
      }
      CHECK(err / scale < 1e-6);
    }
  }
}

TEST_CASE("training") {
  const auto data = small_dataset(8, 16, 4);
  const auto val = small_dataset(4, 16, 4, 99);

  SUBCASE("zero epochs returns the initial model") {
    TrainConfig cfg;
    cfg.epochs = 0;
    const auto r = train(data, val, cfg);
    const auto init = init_model(4, cfg.kernel_size, cfg.seed, 3, 3, cfg.init_noise);
    CHECK(r.history.epochs.empty());
    for (std::size_t i = 0; i < init.parameter_count(); ++i) CHECK(r.model.parameters()[i] == init.parameters()[i]);
  }
  SUBCASE("full-batch l2 descent is monotone") {
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.lr = 0.05;
    const auto r = train(data, val, cfg);
    REQUIRE(r.history.epochs.size() == 30);
    for (std::size_t e = 1; e < 30; ++e) CHECK(r.history.epochs[e].total <= r.history.epochs[e - 1].total);
    for (const auto& rec : r.history.epochs) {
      CHECK(std::isfinite(rec.val_mae));
      CHECK(std::isfinite(rec.val_gap));
    }
  }
  SUBCASE("deterministic with mini-batches and momentum") {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.lr = 0.05;
    cfg.momentum = 0.9;
    cfg.batch_size = 3;
    cfg.loss.lambda = 0.1;
    const auto a = train(data, val, cfg);
    const auto b = train(data, val, cfg);
    for (std::size_t i = 0; i < a.model.parameter_count(); ++i) CHECK(a.model.parameters()[i] == b.model.parameters()[i]);
    CHECK(a.history.batch_orders == b.history.batch_orders);
    REQUIRE(a.history.batch_orders.size() == 5);
    auto order = a.history.batch_orders[0];
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == i);
  }
  SUBCASE("divergence is reported with history") {
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.lr = 1e6;
    try {
      train(data, val, cfg);
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK(e.code() == ErrorCode::DivergenceDetected);
      CHECK(e.history().epochs.size() < 200);
    }
  }
  SUBCASE("empty dataset") {
    CHECK(code_of([&] { train({}, val, TrainConfig{}); }) == ErrorCode::EmptyDataset);
  }
}

TEST_CASE("evaluation") {
  const auto data = small_dataset(3, 16, 4);
  const auto m = init_model(4, 5, 3, 3, 3, 0.0);
  const auto ev = evaluate(m, data);
  REQUIRE(ev.metrics.variables.size() == 6);
  double mae_u = 0.0;
  for (const auto& p : data) mae_u += mae(upsample_nearest(p.input, 4), p.target)[0] / 3.0;
  CHECK(ev.metrics.find("u").mae == doctest::Approx(mae_u).epsilon(1e-12));
  CHECK(ev.diagnostics.variables.size() == 6);
  CHECK_THROWS_AS(evaluate(m, {}), Error);
}

TEST_CASE("model serialization") {
  const auto m = init_model(4, 5, 8);
  const auto bytes = encode_model(m);
  const auto back = decode_model(bytes);
  CHECK(back.factor() == 4);
  CHECK(back.kernel_size() == 5);
  for (std::size_t i = 0; i < m.parameter_count(); ++i) CHECK(back.parameters()[i] == m.parameters()[i]);
  CHECK(encode_model(back) == bytes);
  CHECK(code_of([&] { decode_model(bytes.substr(0, bytes.size() - 3)); }) == ErrorCode::FormatError);
  CHECK(code_of([&] { decode_model("XXXX" + bytes.substr(4)); }) == ErrorCode::FormatError);
  CHECK(code_of([&] { decode_model(bytes + "x"); }) == ErrorCode::FormatError);
}
