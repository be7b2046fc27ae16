#include <doctest.h>

#include "spectral_forge/error.hpp"
#include "spectral_forge/preprocess.hpp"

using namespace sforge;
using namespace sforge::preprocess;

TEST_SUITE("preprocess") {
  TEST_CASE("calibration formula and clamp") {
    SpectralCube raw(1, 2, 2), white(1, 2, 2, 1.0F), dark(1, 2, 2, 0.0F);
    raw.data = {0.5F, -0.2F, 1.0F, 3.0F};
    const auto out = calibrate(raw, {white, dark});
    CHECK(out.data[0] == doctest::Approx(0.5));
    CHECK(out.data[1] == 0.0F);
    CHECK(out.data[2] == doctest::Approx(1.0));
    CHECK(out.data[3] == kCalibrationClampMax);
  }

  TEST_CASE("calibration is exact for a linear sensor") {
    SpectralCube truth(2, 2, 3), white(2, 2, 3), dark(2, 2, 3), raw(2, 2, 3);
    for (std::size_t i = 0; i < truth.data.size(); ++i) {
      truth.data[i] = 0.1F * static_cast<float>(i % 7);
      dark.data[i] = 0.25F;
      white.data[i] = 2.25F;
      raw.data[i] = dark.data[i] + truth.data[i] * (white.data[i] - dark.data[i]);
    }
    const auto out = calibrate(raw, {white, dark});
    for (std::size_t i = 0; i < truth.data.size(); ++i) CHECK(out.data[i] == doctest::Approx(truth.data[i]).epsilon(1e-6));
  }

  TEST_CASE("degenerate reference and shape mismatch") {
    SpectralCube raw(1, 1, 2), white(1, 1, 2, 1.0F), dark(1, 1, 2, 0.0F);
    white.data[1] = 0.0F;
    CHECK_THROWS_AS(calibrate(raw, {white, dark}), Error);
    try {
      calibrate(raw, {white, dark});
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateReference);
    }
    try {
      calibrate(raw, {SpectralCube(1, 1, 3, 1.0F), SpectralCube(1, 1, 3)});
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
  }

  TEST_CASE("l1 normalisation") {
    SpectralCube c(1, 2, 4);
    c.data = {1, 1, 2, 0, 0, 0, 0, 0};
    const auto n = l1_normalize(c);
    CHECK(n.cube.data[2] == doctest::Approx(0.5));
    for (std::size_t i = 4; i < 8; ++i) CHECK(n.cube.data[i] == doctest::Approx(0.25));
    CHECK(n.degenerate == std::vector<std::uint8_t>{0, 1});
    CHECK(n.degenerate_count() == 1);
  }

  TEST_CASE("rgb reconstruction from bands") {
    SpectralCube c(1, 1, 6);
    c.wavelengths_nm = std::vector<double>{500, 540, 550, 590, 600, 650};
    c.data = {1, 3, 5, 7, 9, 11};
    const auto rgb = reconstruct_rgb(c);
    REQUIRE(rgb.channels == 3);
    CHECK(rgb.data[0] == doctest::Approx(10.0));  // R: 600, 650
    CHECK(rgb.data[1] == doctest::Approx(6.0));   // G: 550, 590
    CHECK(rgb.data[2] == doctest::Approx(2.0));   // B: 500, 540
  }

  TEST_CASE("rgb errors") {
    SpectralCube c(1, 1, 2);
    try {
      reconstruct_rgb(c);
      FAIL("expected MissingWavelengths");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingWavelengths);
    }
    c.wavelengths_nm = std::vector<double>{800, 900};
    try {
      reconstruct_rgb(c);
      FAIL("expected EmptyBand");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyBand);
    }
  }

  TEST_CASE("bands from JSON are closed intervals") {
    const auto b = RgbBands::from_json(R"({"blue":[500,550],"green":[550,600],"red":[600,700]})");
    CHECK(b.blue.contains(550.0));
    CHECK_FALSE(RgbBands{}.blue.contains(550.0));
  }
}
