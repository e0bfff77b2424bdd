#pragma once

#include <optional>
#include <string>
#include <vector>

#include "codedp/grid.hpp"

namespace codedp {

// Aperture transmission pattern. Optimized masks carry the latent parameters
// they were produced from: grid = sigmoid(temperature * latent).
struct MaskPattern {
  Grid grid;  // transmission per cell, in [0, 1]
  std::optional<Grid> latent_params;
  double temperature = 0.0;
  bool binary = false;

  int size() const { return grid.rows(); }
  void validate() const;
};

// Sigmoid relaxation of a binary mask at the given temperature (> 0).
MaskPattern mask_from_params(const Grid& latent, double temperature);

// Hard threshold; cells exactly at the threshold open (transmit).
MaskPattern binarize(const MaskPattern& mask, double threshold = 0.5);

// Ones inside the inscribed disc of a size x size grid: the open aperture
// all transmission figures are measured against.
Grid open_disc_grid(int size);

// Fraction of the open-aperture light the mask admits, clamped to [0, 1].
double transmission(const MaskPattern& mask);

// Hinge penalty beta5 * max(0, 0.5 - transmission) discouraging dim masks.
double mask_regularizer(const MaskPattern& mask, double beta5 = 1e3);

// Length-31 maximum-length sequence from the x^5 + x^2 + 1 feedback register,
// all-ones start state.
std::vector<int> mls_sequence_31();

// Named patterns: "open" (inscribed disc), "open_half_area" (the concentric
// disc whose cell count is nearest half the open count), "mls_separable" (31x31 outer
// product of the m-sequence with itself, cropped to the disc; ignores size).
// Anything else is treated as an image path, thresholded at 0.5 after loading
// (white transmits).
MaskPattern builtin_mask(const std::string& name_or_path, int size = 21);

// Grayscale image thresholded at 0.5; white = transparent.
MaskPattern mask_from_file(const std::string& path);

// Grayscale image plus a text sidecar (<path>.meta.txt) holding the
// temperature and binary flag. Loading honors the sidecar and keeps
// continuous values, unlike mask_from_file.
void save_mask(const std::string& path, const MaskPattern& mask);
MaskPattern load_mask(const std::string& path);

}  // namespace codedp
