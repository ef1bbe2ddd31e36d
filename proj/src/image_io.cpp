#include "armrl/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace armrl::render {

void write_png_gray(const std::filesystem::path& path, const Eigen::MatrixXf& channel) {
  const int H = static_cast<int>(channel.rows());
  const int W = static_cast<int>(channel.cols());
  std::vector<png_byte> pixels(static_cast<size_t>(H) * W);
  std::vector<png_bytep> rows(static_cast<size_t>(H));
  for (int r = 0; r < H; ++r) {
    rows[static_cast<size_t>(r)] = &pixels[static_cast<size_t>(r) * W];
    for (int c = 0; c < W; ++c) {
      const float v = std::clamp(channel(r, c), 0.0f, 1.0f);
      pixels[static_cast<size_t>(r) * W + c] = static_cast<png_byte>(std::lround(v * 255.0f));
    }
  }

  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw std::runtime_error("write_png_gray: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    std::fclose(fp);
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png_gray: libpng failure for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void dump_observation(const std::filesystem::path& dir, int episode, int step,
                      const std::vector<CameraView>& views,
                      const std::vector<ObservationImage>& images) {
  std::filesystem::create_directories(dir);
  for (size_t v = 0; v < images.size(); ++v) {
    for (int ch = 0; ch < ObservationImage::kChannels; ++ch) {
      const std::string name = std::to_string(episode) + "_" + std::to_string(step) + "_" +
                               views[v].name + "_" + ObservationImage::channel_name(ch) + ".png";
      write_png_gray(dir / name, images[v].channel(ch));
    }
  }
}

}  // namespace armrl::render
