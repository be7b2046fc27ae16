#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spectral_forge/scene.hpp"

namespace sforge::preprocess {

struct CalibrationPair {
  SpectralCube white;
  SpectralCube dark;
};

/// Upper clamp applied after calibration; values above the white reference
/// are kept up to this bound.
inline constexpr float kCalibrationClampMax = 2.0F;

/// (raw - dark) / (white - dark), clamped to [0, clamp_max].
/// Throws DimensionMismatch, or DegenerateReference when white - dark <= 0 at
/// any element.
SpectralCube calibrate(const SpectralCube& raw, const CalibrationPair& cal,
                       float clamp_max = kCalibrationClampMax);

struct NormalizedCube {
  SpectralCube cube;
  /// One entry per pixel; 1 where the input spectrum had zero l1 norm and was
  /// replaced by the uniform spectrum 1/C.
  std::vector<std::uint8_t> degenerate;
  [[nodiscard]] std::size_t degenerate_count() const;
};

NormalizedCube l1_normalize(const SpectralCube& cube);

/// Wavelength interval. Channels with low <= wl < high are selected, or
/// low <= wl <= high when `include_high` is set.
struct Band {
  double low = 0.0;
  double high = 0.0;
  bool include_high = false;

  [[nodiscard]] bool contains(double wl) const { return wl >= low && (include_high ? wl <= high : wl < high); }
};

struct RgbBands {
  Band blue{500.0, 550.0, false};
  Band green{550.0, 600.0, false};
  Band red{600.0, 700.0, false};

  /// {"blue":[lo,hi],"green":[lo,hi],"red":[lo,hi]}; intervals from JSON are
  /// closed on both ends.
  static RgbBands from_json(const std::string& text);
  [[nodiscard]] std::string to_json() const;
};

/// Output channels ordered R, G, B; each the mean of the input channels whose
/// wavelength lies in the band. Throws MissingWavelengths or EmptyBand.
SpectralCube reconstruct_rgb(const SpectralCube& cube, const RgbBands& bands = {});

}  // namespace sforge::preprocess
