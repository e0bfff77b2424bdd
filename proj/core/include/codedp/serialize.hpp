#pragma once

#include <string>

#include "codedp/psf.hpp"
#include "codedp/render.hpp"

namespace codedp {

// Directory layout for a PSF stack:
//   stack.bin      binary container, see below
//   manifest.txt   camera/model parameters, flags, content hash
// stack.bin: magic "CDPSTACK", then little-endian uint32 version (= 1),
// uint32 plane count, uint32 extent, uint8 coded flag, and per plane one
// float64 signed blur followed by extent^2 float64 left then right kernel
// samples, row-major.
void save_psf_stack(const std::string& dir, const PsfStack& stack);
PsfStack load_psf_stack(const std::string& dir);

// Directory layout for a capture: left.pfm / right.pfm plus manifest.txt
// recording shape and any noise parameters.
void save_capture(const std::string& dir, const DualPixelCapture& capture);
DualPixelCapture load_capture(const std::string& dir);

}  // namespace codedp
