#include "codedp/camera.hpp"

#include <cmath>
#include <limits>

#include "codedp/errors.hpp"

namespace codedp {

void CameraConfig::validate() const {
  if (!(focal_length_mm > 0.0) || !std::isfinite(focal_length_mm))
    throw ValidationError("focal length must be positive");
  if (!(aperture_diameter_mm > 0.0) || !std::isfinite(aperture_diameter_mm))
    throw ValidationError("aperture diameter must be positive");
  if (!std::isfinite(focus_distance_mm) || !(focus_distance_mm > focal_length_mm))
    throw ValidationError(
        "focus distance must exceed the focal length, otherwise no real image forms and the "
        "defocus scale is undefined");
  if (!(pixel_pitch_um > 0.0) || !std::isfinite(pixel_pitch_um))
    throw ValidationError("pixel pitch must be positive");
  if (num_planes < 3 || num_planes % 2 == 0)
    throw ValidationError("plane count must be odd and at least 3 so blur zero is a plane");
  if (!(max_blur_px > 0.0) || !std::isfinite(max_blur_px))
    throw ValidationError("maximum blur must be positive");
}

double CameraConfig::defocus_scale_mm() const {
  return aperture_diameter_mm * focal_length_mm / (1.0 - focal_length_mm / focus_distance_mm);
}

double CameraConfig::blur_mm_at_depth(double z_mm) const {
  if (!(z_mm > 0.0)) throw ValidationError("object depth must be positive");
  return defocus_scale_mm() * (1.0 / focus_distance_mm - 1.0 / z_mm);
}

double CameraConfig::blur_px_at_depth(double z_mm) const {
  return blur_mm_at_depth(z_mm) / pixel_pitch_mm();
}

double CameraConfig::depth_for_blur_px(double blur_px) const {
  if (!std::isfinite(blur_px)) throw ValidationError("blur must be finite");
  const double blur_mm = blur_px * pixel_pitch_mm();
  const double inv_z = 1.0 / focus_distance_mm - blur_mm / defocus_scale_mm();
  // Blurs at or past the far-field limit have no finite preimage.
  if (inv_z <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / inv_z;
}

std::vector<double> CameraConfig::plane_blurs_px() const {
  validate();
  const int mid = num_planes / 2;
  const double spacing = max_blur_px / mid;
  std::vector<double> blurs(num_planes);
  for (int i = 0; i < num_planes; ++i) blurs[i] = (i - mid) * spacing;
  return blurs;
}

double CameraConfig::plane_spacing_px() const { return max_blur_px / (num_planes / 2); }

}  // namespace codedp
