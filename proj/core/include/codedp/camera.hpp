#pragma once

#include <vector>

namespace codedp {

// Thin-lens dual-pixel camera geometry plus the depth-plane discretization
// used throughout the pipeline.
struct CameraConfig {
  double focal_length_mm = 50.0;
  double aperture_diameter_mm = 12.5;
  double focus_distance_mm = 400.0;
  double pixel_pitch_um = 10.72;
  int num_planes = 21;
  double max_blur_px = 40.0;

  void validate() const;

  double pixel_pitch_mm() const { return pixel_pitch_um * 1e-3; }

  // Defocus scale L*f / (1 - f/g) in mm: the factor mapping dioptric depth
  // differences to blur-circle diameters on the sensor.
  double defocus_scale_mm() const;

  // Signed blur-circle diameter for an object at depth z_mm. Positive means
  // farther than the focus distance.
  double blur_mm_at_depth(double z_mm) const;
  double blur_px_at_depth(double z_mm) const;

  // Inverse of blur_px_at_depth. Blurs at or beyond the far-field asymptote
  // map to +infinity.
  double depth_for_blur_px(double blur_px) const;

  // Signed plane blurs, uniformly spaced and exactly symmetric about zero.
  // num_planes must be odd so the in-focus plane is represented exactly.
  std::vector<double> plane_blurs_px() const;
  double plane_spacing_px() const;
};

}  // namespace codedp
