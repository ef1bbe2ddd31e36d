#include "armrl/repr/augment.hpp"

namespace armrl::repr {

namespace {

Eigen::MatrixXf shift_replicate(const Eigen::MatrixXf& in, int dr, int dc) {
  const Eigen::Index H = in.rows(), W = in.cols();
  Eigen::MatrixXf out(H, W);
  for (Eigen::Index r = 0; r < H; ++r) {
    const Eigen::Index sr = std::clamp<Eigen::Index>(r + dr, 0, H - 1);
    for (Eigen::Index c = 0; c < W; ++c) {
      const Eigen::Index sc = std::clamp<Eigen::Index>(c + dc, 0, W - 1);
      out(r, c) = in(sr, sc);
    }
  }
  return out;
}

}  // namespace

render::ObservationImage random_crop_augment(const render::ObservationImage& img, Rng& rng,
                                             int padding) {
  if (padding <= 0) return img;
  std::uniform_int_distribution<int> off(-padding, padding);
  const int dr = off(rng);
  const int dc = off(rng);
  render::ObservationImage out;
  out.depth = shift_replicate(img.depth, dr, dc);
  out.arm_mask = shift_replicate(img.arm_mask, dr, dc);
  out.obstacle_mask = shift_replicate(img.obstacle_mask, dr, dc);
  out.goal_mask = shift_replicate(img.goal_mask, dr, dc);
  return out;
}

render::ObservationImage downsample4(const render::ObservationImage& img) {
  const Eigen::Index H = img.depth.rows() / 4, W = img.depth.cols() / 4;
  auto pool = [&](const Eigen::MatrixXf& in) {
    Eigen::MatrixXf out(H, W);
    for (Eigen::Index r = 0; r < H; ++r)
      for (Eigen::Index c = 0; c < W; ++c) out(r, c) = in.block(4 * r, 4 * c, 4, 4).mean();
    return out;
  };
  render::ObservationImage out;
  out.depth = pool(img.depth);
  out.arm_mask = pool(img.arm_mask);
  out.obstacle_mask = pool(img.obstacle_mask);
  out.goal_mask = pool(img.goal_mask);
  return out;
}

std::vector<render::ObservationImage> view_dropout(
    const std::vector<render::ObservationImage>& views, Rng& rng, double p) {
  std::vector<render::ObservationImage> out = views;
  if (views.empty() || p <= 0.0) return out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<size_t> dropped;
  for (size_t v = 0; v < views.size(); ++v) {
    if (u(rng) < p) dropped.push_back(v);
  }
  size_t spared = views.size();
  if (dropped.size() == views.size()) {
    std::uniform_int_distribution<size_t> pick(0, dropped.size() - 1);
    spared = dropped[pick(rng)];
  }
  for (const size_t v : dropped) {
    if (v == spared) continue;
    out[v].depth.setZero();
    out[v].arm_mask.setZero();
    out[v].obstacle_mask.setZero();
    out[v].goal_mask.setZero();
  }
  return out;
}

}  // namespace armrl::repr
