#include <doctest.h>

#include <cmath>
#include <limits>

#include "spectra/error.hpp"
#include "spectra/grid.hpp"
#include "test_support.hpp"

using namespace spectra;

namespace {

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

TEST_CASE("make_field validates its inputs") {
  const auto f = make_field({0, 0, 0, 0}, 2, 2, 1.0, {"q"});
  CHECK(f.channels() == 1);
  CHECK(f.at(0, 1, 1) == 0.0);

  CHECK(code_of([] { make_field({0, std::nan(""), 0, 0}, 2, 2, 1.0, {"q"}); }) ==
        ErrorCode::NonFiniteValue);
  CHECK(code_of([] { make_field({0, std::numeric_limits<double>::infinity(), 0, 0}, 2, 2, 1.0, {"q"}); }) ==
        ErrorCode::NonFiniteValue);
  CHECK(code_of([] { make_field({0, 0}, 1, 2, 1.0, {"q"}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { make_field({0, 0, 0}, 2, 2, 1.0, {"q"}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { make_field({0, 0, 0, 0}, 2, 2, 0.0, {"q"}); }) == ErrorCode::InvalidSpacing);
  CHECK(code_of([] { make_field({0, 0, 0, 0}, 2, 2, -1.0, {"q"}); }) == ErrorCode::InvalidSpacing);
  CHECK(code_of([] { make_field(std::vector<double>(8, 0.0), 2, 2, 1.0, {"a", "a"}); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("values round-trip bit-exactly through make_field") {
  const auto v = test::random_values(3 * 5 * 7, 11);
  const auto f = make_field(v, 5, 7, 2.5, {"u", "v", "t2m"});
  REQUIRE(f.values().size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(f.values()[i] == v[i]);
  CHECK(f.at(2, 4, 6) == v.back());
  CHECK(f.channel_index("v") == 1);
}

TEST_CASE("block_average_downsample") {
  SUBCASE("constant preserved") {
    const auto f = make_field(std::vector<double>(16, 3.25), 4, 4, 1.0, {"q"});
    const auto d = block_average_downsample(f, 2);
    CHECK(d.height() == 2);
    CHECK(d.dx() == 2.0);
    for (double x : d.values()) CHECK(x == 3.25);
  }
  SUBCASE("hand-computed block mean") {
    // Blocks of [[1,3],[5,7]] tiled so the output stays a valid grid.
    const auto d = block_average_downsample(
        make_field({1, 3, 1, 3, 5, 7, 5, 7, 1, 3, 1, 3, 5, 7, 5, 7}, 4, 4, 1.0, {"q"}), 2);
    CHECK(d.height() == 2);
    CHECK(d.width() == 2);
    for (double x : d.values()) CHECK(x == 4.0);
    CHECK(code_of([] { block_average_downsample(make_field({1, 3, 5, 7}, 2, 2, 1.0, {"q"}), 2); }) ==
          ErrorCode::DimensionMismatch);
  }
  SUBCASE("factor must divide the grid") {
    const auto f = make_field(std::vector<double>(16, 0.0), 4, 4, 1.0, {"q"});
    CHECK(code_of([&] { block_average_downsample(f, 3); }) == ErrorCode::NotDivisible);
  }
  SUBCASE("spatial mean preserved for any factor") {
    for (std::size_t factor : {2u, 4u, 8u}) {
      const auto f = test::random_field(16, 32, 100 + factor, 1.0, {"a", "b"});
      const auto d = block_average_downsample(f, factor);
      const auto sf = field_stats(f), sd = field_stats(d);
      for (std::size_t c = 0; c < 2; ++c) CHECK(sd[c].mean == doctest::Approx(sf[c].mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("field_stats") {
  auto zero = field_stats(make_field({0, 0, 0, 0}, 2, 2, 1.0, {"q"}));
  CHECK(zero[0].mean == 0.0);
  CHECK(zero[0].variance == 0.0);

  auto s = field_stats(make_field({1, 2, 3, 4}, 2, 2, 1.0, {"q"}));
  CHECK(s[0].mean == doctest::Approx(2.5));
  CHECK(s[0].variance == doctest::Approx(1.25));
  CHECK(s[0].min == 1.0);
  CHECK(s[0].max == 4.0);

  auto two = field_stats(make_field({1, 2, 3, 4, 10, 10, 10, 10}, 2, 2, 1.0, {"a", "b"}));
  CHECK(two[0].mean == doctest::Approx(2.5));
  CHECK(two[1].mean == doctest::Approx(10.0));
  CHECK(two[1].variance == doctest::Approx(0.0));
}

TEST_CASE("field pairs require a uniform refinement") {
  const auto fine = test::random_field(8, 8, 1, 1.0, {"u"});
  const auto coarse = block_average_downsample(fine, 4);
  const auto pair = make_field_pair(coarse, fine);
  CHECK(pair.factor == doctest::Approx(4.0));
  const auto odd = test::random_field(6, 8, 2, 1.0, {"u"});
  CHECK(code_of([&] { make_field_pair(coarse, odd); }) == ErrorCode::DimensionMismatch);
}
