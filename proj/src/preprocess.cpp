#include "spectral_forge/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <json.hpp>

#include "spectral_forge/error.hpp"

namespace sforge::preprocess {

SpectralCube calibrate(const SpectralCube& raw, const CalibrationPair& cal, float clamp_max) {
  raw.validate();
  cal.white.validate();
  cal.dark.validate();
  auto same_shape = [&](const SpectralCube& c) {
    return c.height == raw.height && c.width == raw.width && c.channels == raw.channels;
  };
  if (!same_shape(cal.white) || !same_shape(cal.dark))
    fail(ErrorCode::DimensionMismatch, "raw, white and dark cubes must share H, W and C");

  SpectralCube out = raw;
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    const double denom = static_cast<double>(cal.white.data[i]) - static_cast<double>(cal.dark.data[i]);
    if (!(denom > 0.0)) {
      const std::size_t pixel = i / raw.channels;
      fail(ErrorCode::DegenerateReference, "white <= dark at pixel (" + std::to_string(pixel / raw.width) + ", " +
                                               std::to_string(pixel % raw.width) + ") channel " +
                                               std::to_string(i % raw.channels));
    }
    const double v = (static_cast<double>(raw.data[i]) - static_cast<double>(cal.dark.data[i])) / denom;
    out.data[i] = static_cast<float>(std::clamp(v, 0.0, static_cast<double>(clamp_max)));
  }
  return out;
}

std::size_t NormalizedCube::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), std::uint8_t{1}));
}

NormalizedCube l1_normalize(const SpectralCube& cube) {
  cube.validate();
  NormalizedCube out{cube, std::vector<std::uint8_t>(cube.pixels(), 0)};
  const float uniform = 1.0F / static_cast<float>(cube.channels);
  for (std::size_t p = 0; p < cube.pixels(); ++p) {
    const auto src = cube.pixel(p);
    auto dst = out.cube.pixel(p);
    double norm = 0.0;
    for (float v : src) norm += std::abs(static_cast<double>(v));
    if (norm > 0.0) {
      for (std::size_t ch = 0; ch < src.size(); ++ch) dst[ch] = static_cast<float>(src[ch] / norm);
    } else {
      std::fill(dst.begin(), dst.end(), uniform);
      out.degenerate[p] = 1;
    }
  }
  return out;
}

RgbBands RgbBands::from_json(const std::string& text) {
  RgbBands bands;
  try {
    const auto j = nlohmann::json::parse(text);
    auto read = [&](const char* key, Band& band) {
      if (!j.contains(key)) return;
      const auto v = j.at(key).get<std::array<double, 2>>();
      if (!(v[0] <= v[1])) fail(ErrorCode::InvalidArgument, std::string("band '") + key + "' has low > high");
      band = Band{v[0], v[1], true};
    };
    read("blue", bands.blue);
    read("green", bands.green);
    read("red", bands.red);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("band JSON: ") + e.what());
  }
  return bands;
}

std::string RgbBands::to_json() const {
  auto band = [](const Band& b) {
    return nlohmann::json{{"low", b.low}, {"high", b.high}, {"include_high", b.include_high}};
  };
  return nlohmann::json{{"blue", band(blue)}, {"green", band(green)}, {"red", band(red)}}.dump();
}

SpectralCube reconstruct_rgb(const SpectralCube& cube, const RgbBands& bands) {
  cube.validate();
  if (!cube.wavelengths_nm) fail(ErrorCode::MissingWavelengths, "RGB reconstruction needs channel wavelengths");
  const auto& wl = *cube.wavelengths_nm;

  const std::array<const Band*, 3> order = {&bands.red, &bands.green, &bands.blue};
  const std::array<const char*, 3> names = {"red", "green", "blue"};
  std::array<std::vector<std::size_t>, 3> selected;
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t ch = 0; ch < wl.size(); ++ch)
      if (order[b]->contains(wl[ch])) selected[b].push_back(ch);
    if (selected[b].empty())
      fail(ErrorCode::EmptyBand, std::string(names[b]) + " band [" + std::to_string(order[b]->low) + ", " +
                                     std::to_string(order[b]->high) + "] selects no channel");
  }

  SpectralCube out(cube.height, cube.width, 3);
  for (std::size_t p = 0; p < cube.pixels(); ++p) {
    const auto src = cube.pixel(p);
    auto dst = out.pixel(p);
    for (std::size_t b = 0; b < 3; ++b) {
      double sum = 0.0;
      for (std::size_t ch : selected[b]) sum += src[ch];
      dst[b] = static_cast<float>(sum / static_cast<double>(selected[b].size()));
    }
  }
  return out;
}

}  // namespace sforge::preprocess
