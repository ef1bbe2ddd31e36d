#pragma once

#include <random>

#include "armrl/net/core.hpp"
#include "armrl/render.hpp"

namespace armrl::repr {

using Rng = std::mt19937_64;

// Replicate-pad by `padding` pixels and crop a random window back to the
// original size; the same offset applies to all channels of the view.
render::ObservationImage random_crop_augment(const render::ObservationImage& img, Rng& rng,
                                             int padding);

// Average-pools by 4x (used as the hidden-view prediction target).
render::ObservationImage downsample4(const render::ObservationImage& img);

// Zeroes each view with probability p, always retaining at least one.
std::vector<render::ObservationImage> view_dropout(const std::vector<render::ObservationImage>& views,
                                                   Rng& rng, double p);

// Batch variant operating on flattened per-view matrices (one sample per
// column); every sample draws its own mask.
template <typename S>
void view_dropout_batch(std::vector<net::MatX<S>>& views, Rng& rng, double p) {
  if (views.empty() || p <= 0.0) return;
  const Eigen::Index B = views[0].cols();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<size_t> pick(0, views.size() - 1);
  for (Eigen::Index s = 0; s < B; ++s) {
    std::vector<size_t> dropped;
    for (size_t v = 0; v < views.size(); ++v) {
      if (u(rng) < p) dropped.push_back(v);
    }
    size_t spared = views.size();  // none
    if (dropped.size() == views.size()) spared = dropped[pick(rng)];
    for (const size_t v : dropped) {
      if (v == spared) continue;
      views[v].col(s).setZero();
    }
  }
}

// Flattens an observation channel-major (then row-major within channels)
// into one column per view, matching the encoder's expected layout.
template <typename S>
net::VecX<S> flatten_observation(const render::ObservationImage& img) {
  const Eigen::Index H = img.depth.rows(), W = img.depth.cols();
  net::VecX<S> out(4 * H * W);
  for (int ch = 0; ch < render::ObservationImage::kChannels; ++ch) {
    const Eigen::MatrixXf& m = img.channel(ch);
    for (Eigen::Index r = 0; r < H; ++r)
      for (Eigen::Index c = 0; c < W; ++c) out[ch * H * W + r * W + c] = static_cast<S>(m(r, c));
  }
  return out;
}

}  // namespace armrl::repr
