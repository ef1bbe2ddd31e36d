#pragma once

#include <optional>

#include "armrl/net/modules.hpp"
#include "armrl/repr/losses.hpp"

namespace armrl::sac {

using net::MatX;
using net::VecX;

// Q decomposition: base value plus residual correction, one code path for
// every evaluation site.
template <typename S>
MatX<S> combined_q(const MatX<S>& q_base, const MatX<S>& q_residual) {
  return q_base + q_residual;
}

// Residual action added to the base action, clipped to the joint-step bound.
template <typename S>
MatX<S> combined_action(const MatX<S>& base, const MatX<S>& residual, double bound) {
  return (base + residual).cwiseMax(S(-bound)).cwiseMin(S(bound));
}

// Frozen stage-1 outputs: joint-space actor and double critic.
template <typename S>
struct StageOneArtifacts {
  net::ActorConfig actor_cfg;
  net::CriticConfig critic_cfg;
  VecX<S> actor_params;
  VecX<S> q1_params;
  VecX<S> q2_params;

  uint64_t hash() const {
    return net::param_hash(actor_params) ^ (net::param_hash(q1_params) * 1099511628211ull) ^
           (net::param_hash(q2_params) * 14695981039346656037ull);
  }
};

template <typename S>
struct BatchTensors {
  MatX<S> lowdim;       // [q; goal], one column per sample
  MatX<S> next_lowdim;
  std::vector<MatX<S>> images;       // augmented / view-dropped, per view
  std::vector<MatX<S>> key_images;   // second augmentation (contrastive keys)
  std::vector<MatX<S>> next_images;
  MatX<S> actions;      // executed actions
  VecX<S> rewards;
  VecX<S> done;
  VecX<S> collided;     // labels for the collision-dynamics head
  MatX<S> hidden_target;  // downsampled held-out view (hidden-view head)
  int hidden_view = -1;
  Eigen::Index cols() const { return lowdim.cols(); }
};

struct UpdateStats {
  double critic_loss = 0, actor_loss = 0, alpha = 0, alpha_loss = 0, q_mean = 0;
  double aux_curl = 0, aux_view = 0, aux_dyn = 0, aux_hidden = 0;
  double grad_rl = 0, grad_aux = 0;
};

struct AgentOptions {
  double gamma = 0.99;
  double tau = 0.005;
  double lr = 3e-4;
  double lr_alpha = 3e-4;
  bool auto_alpha = true;
  double alpha_init = 0.1;
  double target_entropy = -4.0;
  repr::ContrastiveConfig contrastive;
  bool residual = false;  // stage 2 with a frozen base underneath
};

// Soft actor-critic over an optional residual decomposition with an
// optional multi-view encoder (critic-owned; the actor sees embeddings
// without gradients flowing back).
template <typename S>
class SacAgent {
 public:
  SacAgent(const net::ActorConfig& actor_cfg, const net::CriticConfig& critic_cfg,
           std::optional<net::EncoderConfig> encoder_cfg, std::optional<repr::AuxConfig> aux_cfg,
           const AgentOptions& opts, net::Rng& rng,
           std::optional<StageOneArtifacts<S>> base = std::nullopt)
      : actor(actor_cfg, rng),
        q1(critic_cfg, rng),
        q2(critic_cfg, rng),
        opts_(opts),
        opt_actor_(opts.lr),
        opt_q1_(opts.lr),
        opt_q2_(opts.lr),
        opt_enc_(opts.lr),
        opt_aux_(opts.lr),
        opt_alpha_(opts.lr_alpha) {
    tq1_ = q1.params;
    tq2_ = q2.params;
    if (encoder_cfg) {
      encoder.emplace(*encoder_cfg, rng);
      tenc_ = encoder->params;
      momentum.params = encoder->params;
      momentum.m = opts.contrastive.momentum;
    }
    if (aux_cfg) aux.emplace(*aux_cfg, rng);
    if (base) {
      base_.emplace(std::move(*base));
      net::Rng scratch(0);
      base_actor_.emplace(base_->actor_cfg, scratch);
      base_actor_->params = base_->actor_params;
      base_q1_.emplace(base_->critic_cfg, scratch);
      base_q1_->params = base_->q1_params;
      base_q2_.emplace(base_->critic_cfg, scratch);
      base_q2_->params = base_->q2_params;
    }
    log_alpha_ = VecX<S>::Constant(1, S(std::log(opts.alpha_init)));
  }

  // ---- inference ------------------------------------------------------------

  MatX<S> encode(const std::vector<MatX<S>>& images) const {
    return encoder->forward(encoder->params, images, nullptr);
  }

  // Deterministic action: base mean plus residual mean (stage 2) or the
  // plain actor mean (stage 1).
  MatX<S> deterministic_action(const MatX<S>& lowdim, const std::vector<MatX<S>>& images) const {
    const MatX<S> vis = encoder ? encode(images) : MatX<S>(0, lowdim.cols());
    const auto dist = actor.forward(actor.params, lowdim, vis, nullptr);
    MatX<S> a = net::deterministic_action(dist, actor.config().action_bound);
    if (opts_.residual) return combined_action(base_action(lowdim), a, actor.config().action_bound);
    return a;
  }

  MatX<S> sample_action(const MatX<S>& lowdim, const std::vector<MatX<S>>& images,
                        net::Rng& rng) const {
    const MatX<S> vis = encoder ? encode(images) : MatX<S>(0, lowdim.cols());
    const auto dist = actor.forward(actor.params, lowdim, vis, nullptr);
    const auto s = net::sample_squashed(dist, actor.config().action_bound, rng);
    if (opts_.residual)
      return combined_action(base_action(lowdim), s.action, actor.config().action_bound);
    return s.action;
  }

  // Frozen base policy's deterministic action on the low-dim state.
  MatX<S> base_action(const MatX<S>& lowdim) const {
    const auto dist =
        base_actor_->forward(base_actor_->params, lowdim, MatX<S>(0, lowdim.cols()), nullptr);
    return net::deterministic_action(dist, base_actor_->config().action_bound);
  }

  // Combined per-head Q on arbitrary inputs (evaluation/tests).
  std::pair<MatX<S>, MatX<S>> q_values(const MatX<S>& lowdim, const std::vector<MatX<S>>& images,
                                       const MatX<S>& action) const {
    const MatX<S> vis = encoder ? encode(images) : MatX<S>(0, lowdim.cols());
    MatX<S> qa = q1.forward(q1.params, lowdim, vis, action, nullptr);
    MatX<S> qb = q2.forward(q2.params, lowdim, vis, action, nullptr);
    if (opts_.residual) {
      const MatX<S> low1 = lowdim;  // base consumes the same joints+goal slice
      qa = combined_q(base_q(*base_q1_, low1, action), qa);
      qb = combined_q(base_q(*base_q2_, low1, action), qb);
    }
    return {qa, qb};
  }

  // ---- training -------------------------------------------------------------

  // Eq. 2 target with clipped double-Q and entropy correction.
  VecX<S> compute_target(const BatchTensors<S>& b, net::Rng& rng) const {
    const Eigen::Index B = b.cols();
    const MatX<S> vis_online =
        encoder ? encoder->forward(encoder->params, b.next_images, nullptr) : MatX<S>(0, B);
    const auto dist = actor.forward(actor.params, b.next_lowdim, vis_online, nullptr);
    const auto sampled = net::sample_squashed(dist, actor.config().action_bound, rng);
    MatX<S> a_next = sampled.action;
    if (opts_.residual)
      a_next = combined_action(base_action(b.next_lowdim), a_next, actor.config().action_bound);

    const MatX<S> vis_target =
        encoder ? encoder->forward(tenc_, b.next_images, nullptr) : MatX<S>(0, B);
    MatX<S> qa = q1.forward(tq1_, b.next_lowdim, vis_target, a_next, nullptr);
    MatX<S> qb = q2.forward(tq2_, b.next_lowdim, vis_target, a_next, nullptr);
    if (opts_.residual) {
      qa = combined_q(base_q(*base_q1_, b.next_lowdim, a_next), qa);
      qb = combined_q(base_q(*base_q2_, b.next_lowdim, a_next), qb);
    }
    const S a_coef = alpha();
    VecX<S> y(B);
    for (Eigen::Index i = 0; i < B; ++i) {
      const S qmin = std::min(qa(0, i), qb(0, i));
      y[i] = b.rewards[i] +
             S(opts_.gamma) * (S(1) - b.done[i]) * (qmin - a_coef * sampled.logprob[i]);
    }
    return y;
  }

  struct CriticGrads {
    UpdateStats st;
    VecX<S> g1, g2, genc, gaux;
  };

  // Critic (plus auxiliary representation) update. Returns stats.
  UpdateStats update_critic(const BatchTensors<S>& b, const VecX<S>& y) {
    CriticGrads cg = critic_gradients(b, y);
    opt_q1_.step(q1.params, cg.g1);
    opt_q2_.step(q2.params, cg.g2);
    if (encoder) opt_enc_.step(encoder->params, cg.genc);
    if (aux && cg.gaux.size() > 0) opt_aux_.step(aux->params, cg.gaux);
    return cg.st;
  }

  // Pure gradient computation for the critic and auxiliary objectives.
  CriticGrads critic_gradients(const BatchTensors<S>& b, const VecX<S>& y) const {
    UpdateStats st;
    const Eigen::Index B = b.cols();
    typename net::MultiViewEncoder<S>::Cache enc_cache;
    const MatX<S> vis =
        encoder ? encoder->forward(encoder->params, b.images, &enc_cache) : MatX<S>(0, B);

    typename net::QCritic<S>::Cache c1, c2;
    MatX<S> qa = q1.forward(q1.params, b.lowdim, vis, b.actions, &c1);
    MatX<S> qb = q2.forward(q2.params, b.lowdim, vis, b.actions, &c2);
    if (opts_.residual) {
      qa = combined_q(base_q(*base_q1_, b.lowdim, b.actions), qa);
      qb = combined_q(base_q(*base_q2_, b.lowdim, b.actions), qb);
    }

    const MatX<S> da = (qa.row(0).transpose() - y).transpose() / S(2 * B);
    const MatX<S> db = (qb.row(0).transpose() - y).transpose() / S(2 * B);
    st.critic_loss = 0.5 * ((qa.row(0).transpose() - y).squaredNorm() +
                            (qb.row(0).transpose() - y).squaredNorm()) /
                     double(2 * B);
    st.q_mean = 0.5 * (qa.mean() + qb.mean());

    VecX<S> g1 = VecX<S>::Zero(q1.param_count());
    VecX<S> g2 = VecX<S>::Zero(q2.param_count());
    MatX<S> dvis1, dvis2;
    q1.backward(q1.params, c1, da, g1, encoder ? &dvis1 : nullptr);
    q2.backward(q2.params, c2, db, g2, encoder ? &dvis2 : nullptr);

    VecX<S> genc;
    VecX<S> gaux;
    if (encoder) {
      genc = VecX<S>::Zero(encoder->param_count());
      MatX<S> dz = dvis1 + dvis2;
      std::vector<MatX<S>> dfeats;
      bool have_dfeats = false;

      if (aux) {
        gaux = VecX<S>::Zero(aux->param_count());
        const auto& cc = opts_.contrastive;
        if (cc.lambda_curl > 0 && !b.key_images.empty()) {
          const MatX<S> keys = encoder->forward(momentum.params, b.key_images, nullptr);
          MatX<S> dq;
          st.aux_curl = aux->curl_loss(aux->params, vis, keys, gaux, &dq);
          // scale: aux gradients into the shared encoder and W
          dz += S(cc.lambda_curl) * dq;
          if (cc.lambda_curl != 1.0) scale_slice(gaux, aux->curl_W_id(), S(cc.lambda_curl));
        }
        if (cc.lambda_view > 0 && enc_cache.view_feats.size() >= 2) {
          std::vector<MatX<S>> df;
          st.aux_view = aux->cross_view_loss(aux->params, enc_cache.view_feats, gaux, &df);
          for (auto& m : df) m *= S(cc.lambda_view);
          dfeats = std::move(df);
          have_dfeats = true;
          if (cc.lambda_view != 1.0) scale_slice(gaux, aux->view_W_id(), S(cc.lambda_view));
        }
        if (cc.lambda_dyn > 0) {
          MatX<S> dzc;
          st.aux_dyn = aux->collision_loss(aux->params, vis, b.actions, b.collided,
                                           cc.collision_pos_weighting, gaux, &dzc);
          dz += S(cc.lambda_dyn) * dzc;
          scale_slices(gaux, aux->collision_slice_range(), S(cc.lambda_dyn));
        }
        if (cc.lambda_hidden > 0 && aux->config().hidden_view && b.hidden_view >= 0) {
          std::vector<MatX<S>> subset = b.images;
          subset[static_cast<size_t>(b.hidden_view)].setZero();
          typename net::MultiViewEncoder<S>::Cache subset_cache;
          const MatX<S> z_subset = encoder->forward(encoder->params, subset, &subset_cache);
          MatX<S> dzh;
          st.aux_hidden = aux->hidden_view_loss(aux->params, z_subset, b.hidden_target, gaux, &dzh);
          scale_slices(gaux, aux->decoder_slice_range(), S(cc.lambda_hidden));
          const MatX<S> dzh_scaled = S(cc.lambda_hidden) * dzh;
          encoder->backward(encoder->params, subset_cache, dzh_scaled, nullptr, genc);
        }
      }
      encoder->backward(encoder->params, enc_cache, dz, have_dfeats ? &dfeats : nullptr, genc);
      st.grad_aux = aux ? double(gaux.norm()) : 0.0;
    }

    st.grad_rl = double(std::sqrt(g1.squaredNorm() + g2.squaredNorm()));
    CriticGrads cg;
    cg.st = st;
    cg.g1 = std::move(g1);
    cg.g2 = std::move(g2);
    cg.genc = std::move(genc);
    cg.gaux = std::move(gaux);
    return cg;
  }

  struct ActorGrads {
    UpdateStats st;
    VecX<S> grad;
    VecX<S> logprob;
  };

  // Actor update; warm-up drives the policy with the frozen base Q only.
  UpdateStats update_actor(const BatchTensors<S>& b, net::Rng& rng, bool warmup) {
    MatX<S> eps(actor.config().n_actions, b.cols());
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = S(n(rng));
    ActorGrads ag = actor_gradients(b, eps, warmup);
    opt_actor_.step(actor.params, ag.grad);
    ag.st.alpha = double(alpha());
    if (opts_.auto_alpha) ag.st.alpha_loss = update_alpha(ag.logprob);
    ag.st.alpha = double(alpha());
    return ag.st;
  }

  // Pure actor gradient with externally supplied reparameterization noise.
  ActorGrads actor_gradients(const BatchTensors<S>& b, const MatX<S>& eps, bool warmup) const {
    UpdateStats st;
    const Eigen::Index B = b.cols();
    const MatX<S> vis =
        encoder ? encoder->forward(encoder->params, b.images, nullptr) : MatX<S>(0, B);
    typename net::GaussianActor<S>::Cache ac;
    const auto dist = actor.forward(actor.params, b.lowdim, vis, &ac);
    net::SampledAction<S> sampled;
    sampled.eps = eps;
    sampled.pre = dist.mu + (dist.logstd.array().exp() * eps.array()).matrix();
    sampled.action =
        S(actor.config().action_bound) * sampled.pre.array().tanh().matrix();
    sampled.logprob = net::logprob_of_pre(dist, sampled.pre, actor.config().action_bound);
    const double bound = actor.config().action_bound;

    MatX<S> a_exec = sampled.action;
    MatX<S> clip_mask = MatX<S>::Ones(a_exec.rows(), a_exec.cols());
    if (opts_.residual) {
      const MatX<S> pre_clip = base_action(b.lowdim) + sampled.action;
      a_exec = pre_clip.cwiseMax(S(-bound)).cwiseMin(S(bound));
      clip_mask = (pre_clip.array().abs() <= S(bound)).template cast<S>().matrix();
    }

    // q of the sampled action; during warm-up the objective uses base Q only
    MatX<S> qa, qb;
    typename net::QCritic<S>::Cache c1, c2, cb1, cb2;
    MatX<S> qra, qrb;
    if (warmup && opts_.residual) {
      qa = base_q_cache(*base_q1_, b.lowdim, a_exec, &cb1);
      qb = base_q_cache(*base_q2_, b.lowdim, a_exec, &cb2);
    } else {
      qra = q1.forward(q1.params, b.lowdim, vis, a_exec, &c1);
      qrb = q2.forward(q2.params, b.lowdim, vis, a_exec, &c2);
      qa = qra;
      qb = qrb;
      if (opts_.residual) {
        qa = combined_q(base_q_cache(*base_q1_, b.lowdim, a_exec, &cb1), qra);
        qb = combined_q(base_q_cache(*base_q2_, b.lowdim, a_exec, &cb2), qrb);
      }
    }

    const S a_coef = alpha();
    double loss = 0;
    MatX<S> dqa = MatX<S>::Zero(1, B);
    MatX<S> dqb = MatX<S>::Zero(1, B);
    for (Eigen::Index i = 0; i < B; ++i) {
      const S qmin = std::min(qa(0, i), qb(0, i));
      loss += double(a_coef * sampled.logprob[i] - qmin);
      // d(-qmin)/dq of the min head
      if (qa(0, i) <= qb(0, i)) {
        dqa(0, i) = S(-1) / S(B);
      } else {
        dqb(0, i) = S(-1) / S(B);
      }
    }
    st.actor_loss = loss / double(B);

    // action gradient through all contributing critics (parameters frozen here)
    MatX<S> dL_da = MatX<S>::Zero(a_exec.rows(), B);
    VecX<S> scratch;
    MatX<S> da_part;
    auto add_action_grad = [&](const net::QCritic<S>& net_, const VecX<S>& params,
                               typename net::QCritic<S>::Cache& cache, const MatX<S>& dq) {
      if ((dq.array() == S(0)).all()) return;
      scratch = VecX<S>::Zero(net_.param_count());
      net_.backward(params, cache, dq, scratch, nullptr, &da_part);
      dL_da += da_part;
    };
    if (warmup && opts_.residual) {
      add_action_grad(*base_q1_, base_q1_->params, cb1, dqa);
      add_action_grad(*base_q2_, base_q2_->params, cb2, dqb);
    } else {
      add_action_grad(q1, q1.params, c1, dqa);
      add_action_grad(q2, q2.params, c2, dqb);
      if (opts_.residual) {
        add_action_grad(*base_q1_, base_q1_->params, cb1, dqa);
        add_action_grad(*base_q2_, base_q2_->params, cb2, dqb);
      }
    }
    if (opts_.residual) dL_da = (dL_da.array() * clip_mask.array()).matrix();

    const VecX<S> w_lp = VecX<S>::Constant(B, a_coef / S(B));
    const auto sg = net::squashed_backward(dist, sampled, dL_da, w_lp, bound);
    ActorGrads ag;
    ag.grad = VecX<S>::Zero(actor.param_count());
    actor.backward(actor.params, ac, sg.dmu, sg.dlogstd, ag.grad);
    ag.logprob = sampled.logprob;
    ag.st = st;
    return ag;
  }

  // Temperature step toward the target entropy; returns the alpha loss.
  double update_alpha(const VecX<S>& logprob) {
    if (!opts_.auto_alpha) return 0.0;
    const S mean_term = (logprob.array() + S(opts_.target_entropy)).mean();
    const double loss = double(-alpha() * mean_term);
    VecX<S> galpha(1);
    galpha[0] = -alpha() * mean_term;  // gradient w.r.t. log alpha
    opt_alpha_.step(log_alpha_, galpha);
    return loss;
  }

  void update_targets() {
    net::polyak_update(tq1_, q1.params, opts_.tau);
    net::polyak_update(tq2_, q2.params, opts_.tau);
    if (encoder) {
      net::polyak_update(tenc_, encoder->params, opts_.tau);
      momentum.update(encoder->params);
    }
  }

  UpdateStats update(const BatchTensors<S>& b, net::Rng& rng, bool warmup = false) {
    const VecX<S> y = compute_target(b, rng);
    UpdateStats st = update_critic(b, y);
    const UpdateStats sa = update_actor(b, rng, warmup);
    st.actor_loss = sa.actor_loss;
    st.alpha = sa.alpha;
    st.alpha_loss = sa.alpha_loss;
    update_targets();
    return st;
  }

  S alpha() const { return std::exp(log_alpha_[0]); }
  void set_alpha(double a) { log_alpha_[0] = S(std::log(a)); }
  const AgentOptions& options() const { return opts_; }
  const StageOneArtifacts<S>* base() const { return base_ ? &*base_ : nullptr; }
  const VecX<S>& target_q1() const { return tq1_; }
  const VecX<S>& target_q2() const { return tq2_; }
  const VecX<S>& target_encoder_params() const { return tenc_; }

  StageOneArtifacts<S> export_artifacts() const {
    StageOneArtifacts<S> art;
    art.actor_cfg = actor.config();
    art.critic_cfg = q1.config();
    art.actor_params = actor.params;
    art.q1_params = q1.params;
    art.q2_params = q2.params;
    return art;
  }

  net::GaussianActor<S> actor;
  net::QCritic<S> q1, q2;
  std::optional<net::MultiViewEncoder<S>> encoder;
  std::optional<repr::AuxHeads<S>> aux;
  repr::MomentumEncoder<S> momentum;

 private:
  MatX<S> base_q(net::QCritic<S>& critic, const MatX<S>& lowdim, const MatX<S>& action) const {
    return critic.forward(critic.params, lowdim, MatX<S>(0, lowdim.cols()), action, nullptr);
  }
  MatX<S> base_q_cache(net::QCritic<S>& critic, const MatX<S>& lowdim, const MatX<S>& action,
                       typename net::QCritic<S>::Cache* cache) const {
    return critic.forward(critic.params, lowdim, MatX<S>(0, lowdim.cols()), action, cache);
  }
  void scale_slice(VecX<S>& grad, int id, S factor) const {
    aux->layout().mat(grad, id) *= factor;
  }
  void scale_slices(VecX<S>& grad, std::pair<int, int> range, S factor) const {
    for (int id = range.first; id < range.second; ++id) aux->layout().mat(grad, id) *= factor;
  }

  AgentOptions opts_;
  VecX<S> tq1_, tq2_, tenc_;
  VecX<S> log_alpha_;
  std::optional<StageOneArtifacts<S>> base_;
  mutable std::optional<net::GaussianActor<S>> base_actor_;
  mutable std::optional<net::QCritic<S>> base_q1_, base_q2_;
  net::Adam<S> opt_actor_, opt_q1_, opt_q2_, opt_enc_, opt_aux_, opt_alpha_;
};

}  // namespace armrl::sac
