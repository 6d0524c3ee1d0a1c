#pragma once

#include <string>

#include "retinabow/image.hpp"

namespace rbow {

/// Decode an image file (PNG, JPEG, PPM, BMP, TIFF) into double planes
/// scaled to [0,1]. Grayscale files are replicated across the three planes.
/// Throws std::runtime_error when the file is missing or undecodable.
RgbImage load_image(const std::string& path);

/// Write an 8-bit image; format chosen from the file extension. Values are
/// clamped to [0,1] before quantization.
void save_image(const std::string& path, const RgbImage& img);
void save_image(const std::string& path, const Plane& gray);

}  // namespace rbow
