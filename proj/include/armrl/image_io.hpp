#pragma once

#include <filesystem>
#include <string>

#include "armrl/render.hpp"

namespace armrl::render {

// 8-bit grayscale PNG, values = round(255 * pixel).
void write_png_gray(const std::filesystem::path& path, const Eigen::MatrixXf& channel);

// Writes every channel of every view as {episode}_{step}_{view}_{channel}.png.
void dump_observation(const std::filesystem::path& dir, int episode, int step,
                      const std::vector<CameraView>& views,
                      const std::vector<ObservationImage>& images);

}  // namespace armrl::render
