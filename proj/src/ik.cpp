#include "armrl/ik.hpp"

#include <Eigen/Dense>

namespace armrl::eval {

std::optional<world::JointVec> dls_ik(const world::ArmModel& model, const geom::Vec3& target,
                                      const world::JointVec& seed_q, const IkOptions& opts) {
  world::JointVec q = model.clamp_to_limits(seed_q);
  for (int it = 0; it <= opts.max_iters; ++it) {
    const geom::Vec3 err = target - world::forward_kinematics(model, q).tip;
    if (err.norm() < opts.tolerance) return q;
    if (it == opts.max_iters) break;
    const Eigen::Matrix3Xd jac = world::jacobian(model, q);
    const Eigen::Matrix3d jjt =
        jac * jac.transpose() + opts.damping * opts.damping * Eigen::Matrix3d::Identity();
    world::JointVec dq = jac.transpose() * jjt.ldlt().solve(err);
    const double norm = dq.norm();
    if (norm > opts.max_step) dq *= opts.max_step / norm;
    q = model.clamp_to_limits(q + dq);
  }
  return std::nullopt;
}

std::optional<world::JointVec> dls_ik_restarts(const world::ArmModel& model,
                                               const geom::Vec3& target, int restarts,
                                               world::Rng& rng, const IkOptions& opts) {
  const int n = model.n_joints();
  for (int r = 0; r < restarts; ++r) {
    world::JointVec seed(n);
    for (int i = 0; i < n; ++i) {
      std::uniform_real_distribution<double> u(model.limit_lo[i], model.limit_hi[i]);
      seed[i] = u(rng);
    }
    if (auto q = dls_ik(model, target, seed, opts)) return q;
  }
  return std::nullopt;
}

}  // namespace armrl::eval
