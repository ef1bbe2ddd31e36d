#pragma once

#include <sstream>

#include "armrl/net/core.hpp"

namespace armrl::net {

// ---- multi-view convolutional encoder --------------------------------------

struct EncoderConfig {
  int views = 3;
  int channels = 4;
  int height = 48;
  int width = 48;
  std::vector<int> conv_channels{16, 32, 32, 32};
  int fusion_hidden = 128;
  int embed_dim = 64;
  bool shared_conv = true;
};

template <typename S>
class MultiViewEncoder {
 public:
  struct Cache {
    // per view, per conv layer
    std::vector<std::vector<MatX<S>>> pre;
    std::vector<std::vector<ConvCache<S>>> conv;
    std::vector<MatX<S>> view_feats;  // post-relu flattened conv output per view
    MatX<S> concat, fuse1_pre, fuse1_out;
  };

  explicit MultiViewEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
    const int stacks = cfg.shared_conv ? 1 : cfg.views;
    for (int stack = 0; stack < stacks; ++stack) {
      std::vector<ConvIds> ids;
      int cin = cfg.channels, h = cfg.height, w = cfg.width;
      for (const int cout : cfg.conv_channels) {
        ConvSpec sp;
        sp.cin = cin;
        sp.cout = cout;
        sp.hin = h;
        sp.win = w;
        ids.push_back(add_conv(layout_, sp));
        cin = cout;
        h = sp.hout();
        w = sp.wout();
      }
      conv_ids_.push_back(std::move(ids));
      feat_dim_ = Eigen::Index(cin) * h * w;
    }
    fuse1_ = add_dense(layout_, feat_dim_ * cfg.views, cfg.fusion_hidden);
    fuse2_ = add_dense(layout_, cfg.fusion_hidden, cfg.embed_dim);
    params = VecX<S>::Zero(layout_.size());
    for (auto& ids : conv_ids_)
      for (auto& c : ids) he_uniform_init(layout_, params, c.W, c.b, rng);
    he_uniform_init(layout_, params, fuse1_.W, fuse1_.b, rng);
    he_uniform_init(layout_, params, fuse2_.W, fuse2_.b, rng);
  }

  MatX<S> forward(const VecX<S>& p, const std::vector<MatX<S>>& images, Cache* cache) const {
    if (static_cast<int>(images.size()) != cfg_.views)
      throw std::invalid_argument("encoder: view count mismatch");
    const Eigen::Index B = images[0].cols();
    MatX<S> concat(feat_dim_ * cfg_.views, B);
    Cache local;
    Cache& c = cache ? *cache : local;
    c.pre.assign(static_cast<size_t>(cfg_.views), {});
    c.conv.assign(static_cast<size_t>(cfg_.views), {});
    c.view_feats.assign(static_cast<size_t>(cfg_.views), {});
    for (int v = 0; v < cfg_.views; ++v) {
      const auto& ids = conv_ids_[cfg_.shared_conv ? 0 : static_cast<size_t>(v)];
      MatX<S> x = images[static_cast<size_t>(v)];
      for (const auto& conv : ids) {
        c.conv[static_cast<size_t>(v)].emplace_back();
        MatX<S> pre = conv_fwd(layout_, p, conv, x, &c.conv[static_cast<size_t>(v)].back());
        x = relu(pre);
        c.pre[static_cast<size_t>(v)].push_back(std::move(pre));
      }
      c.view_feats[static_cast<size_t>(v)] = x;
      concat.middleRows(feat_dim_ * v, feat_dim_) = x;
    }
    c.concat = std::move(concat);
    c.fuse1_pre = dense_fwd(layout_, p, fuse1_, c.concat);
    c.fuse1_out = relu(c.fuse1_pre);
    return dense_fwd(layout_, p, fuse2_, c.fuse1_out);
  }

  void backward(const VecX<S>& p, const Cache& c, const MatX<S>& dZ,
                const std::vector<MatX<S>>* dview_feats, VecX<S>& grad) const {
    MatX<S> dfuse1_out = dense_bwd(layout_, p, fuse2_, c.fuse1_out, dZ, grad);
    MatX<S> dfuse1_pre = relu_bwd(c.fuse1_pre, dfuse1_out);
    MatX<S> dconcat = dense_bwd(layout_, p, fuse1_, c.concat, dfuse1_pre, grad);
    for (int v = 0; v < cfg_.views; ++v) {
      const auto& ids = conv_ids_[cfg_.shared_conv ? 0 : static_cast<size_t>(v)];
      MatX<S> dout = dconcat.middleRows(feat_dim_ * v, feat_dim_);
      if (dview_feats && (*dview_feats)[static_cast<size_t>(v)].size() > 0)
        dout += (*dview_feats)[static_cast<size_t>(v)];
      for (int layer = static_cast<int>(ids.size()) - 1; layer >= 0; --layer) {
        const MatX<S> dpre = relu_bwd(c.pre[static_cast<size_t>(v)][static_cast<size_t>(layer)], dout);
        dout = conv_bwd(layout_, p, ids[static_cast<size_t>(layer)], dpre,
                        c.conv[static_cast<size_t>(v)][static_cast<size_t>(layer)], grad);
      }
    }
  }

  Eigen::Index view_feat_dim() const { return feat_dim_; }
  Eigen::Index param_count() const { return layout_.size(); }
  const Layout& layout() const { return layout_; }
  const EncoderConfig& config() const { return cfg_; }

  std::string architecture() const {
    std::ostringstream os;
    os << "mvenc(v=" << cfg_.views << ",c=" << cfg_.channels << "," << cfg_.height << "x"
       << cfg_.width << ",conv=";
    for (const int c : cfg_.conv_channels) os << c << "_";
    os << ",fh=" << cfg_.fusion_hidden << ",z=" << cfg_.embed_dim
       << ",shared=" << cfg_.shared_conv << ")";
    return os.str();
  }

  VecX<S> params;

 private:
  EncoderConfig cfg_;
  Layout layout_;
  std::vector<std::vector<ConvIds>> conv_ids_;
  DenseIds fuse1_, fuse2_;
  Eigen::Index feat_dim_ = 0;
};

// ---- tanh-squashed Gaussian policy -----------------------------------------

struct ActorConfig {
  int lowdim_in = 7;  // joints + goal
  int vis_dim = 0;
  int joint_embed = 64;
  int hidden = 256;
  int n_actions = 4;
  double action_bound = 0.05;
  double logstd_min = -10.0;
  double logstd_max = 2.0;
  bool zero_init_head = false;
};

template <typename S>
struct Dist {
  MatX<S> mu;      // n_act x B
  MatX<S> logstd;  // clamped
};

template <typename S>
struct SampledAction {
  MatX<S> eps;     // standard normal draws
  MatX<S> pre;     // mu + sigma .* eps
  MatX<S> action;  // tanh(pre) * bound
  VecX<S> logprob; // per sample
};

inline constexpr double kSquashEps = 1e-6;

template <typename S>
class GaussianActor {
 public:
  struct Cache {
    MatX<S> low_in, vis_in, je_pre, je_out, cat, fc1_pre, fc1_out, fc2_pre, fc2_out, head_raw;
  };

  GaussianActor(const ActorConfig& cfg, Rng& rng) : cfg_(cfg) {
    je_ = add_dense(layout_, cfg.lowdim_in, cfg.joint_embed);
    fc1_ = add_dense(layout_, cfg.joint_embed + cfg.vis_dim, cfg.hidden);
    fc2_ = add_dense(layout_, cfg.hidden, cfg.hidden);
    head_ = add_dense(layout_, cfg.hidden, 2 * cfg.n_actions);
    params = VecX<S>::Zero(layout_.size());
    he_uniform_init(layout_, params, je_.W, je_.b, rng);
    he_uniform_init(layout_, params, fc1_.W, fc1_.b, rng);
    he_uniform_init(layout_, params, fc2_.W, fc2_.b, rng);
    if (!cfg.zero_init_head) small_uniform_init(layout_, params, head_.W, head_.b, rng);
  }

  Dist<S> forward(const VecX<S>& p, const MatX<S>& lowdim, const MatX<S>& vis,
                  Cache* cache) const {
    if (lowdim.rows() != cfg_.lowdim_in) throw std::invalid_argument("actor: lowdim shape");
    if (vis.rows() != cfg_.vis_dim) throw std::invalid_argument("actor: vis shape");
    Cache local;
    Cache& c = cache ? *cache : local;
    c.low_in = lowdim;
    c.vis_in = vis;
    c.je_pre = dense_fwd(layout_, p, je_, lowdim);
    c.je_out = relu(c.je_pre);
    c.cat.resize(cfg_.joint_embed + cfg_.vis_dim, lowdim.cols());
    c.cat.topRows(cfg_.joint_embed) = c.je_out;
    if (cfg_.vis_dim > 0) c.cat.bottomRows(cfg_.vis_dim) = vis;
    c.fc1_pre = dense_fwd(layout_, p, fc1_, c.cat);
    c.fc1_out = relu(c.fc1_pre);
    c.fc2_pre = dense_fwd(layout_, p, fc2_, c.fc1_out);
    c.fc2_out = relu(c.fc2_pre);
    c.head_raw = dense_fwd(layout_, p, head_, c.fc2_out);
    Dist<S> d;
    d.mu = c.head_raw.topRows(cfg_.n_actions);
    d.logstd = c.head_raw.bottomRows(cfg_.n_actions)
                   .cwiseMax(S(cfg_.logstd_min))
                   .cwiseMin(S(cfg_.logstd_max));
    return d;
  }

  // dmu/dlogstd are gradients w.r.t. the clamped outputs.
  void backward(const VecX<S>& p, const Cache& c, const MatX<S>& dmu, const MatX<S>& dlogstd,
                VecX<S>& grad, MatX<S>* dvis = nullptr) const {
    MatX<S> dhead(2 * cfg_.n_actions, dmu.cols());
    dhead.topRows(cfg_.n_actions) = dmu;
    const auto raw = c.head_raw.bottomRows(cfg_.n_actions).array();
    dhead.bottomRows(cfg_.n_actions) =
        (dlogstd.array() * ((raw > S(cfg_.logstd_min)) && (raw < S(cfg_.logstd_max)))
                               .template cast<S>()).matrix();
    MatX<S> dfc2_out = dense_bwd(layout_, p, head_, c.fc2_out, dhead, grad);
    MatX<S> dfc2_pre = relu_bwd(c.fc2_pre, dfc2_out);
    MatX<S> dfc1_out = dense_bwd(layout_, p, fc2_, c.fc1_out, dfc2_pre, grad);
    MatX<S> dfc1_pre = relu_bwd(c.fc1_pre, dfc1_out);
    MatX<S> dcat = dense_bwd(layout_, p, fc1_, c.cat, dfc1_pre, grad);
    if (dvis && cfg_.vis_dim > 0) *dvis = dcat.bottomRows(cfg_.vis_dim);
    MatX<S> dje_pre = relu_bwd(c.je_pre, MatX<S>(dcat.topRows(cfg_.joint_embed)));
    dense_bwd(layout_, p, je_, c.low_in, dje_pre, grad);
  }

  Eigen::Index param_count() const { return layout_.size(); }
  const Layout& layout() const { return layout_; }
  const ActorConfig& config() const { return cfg_; }

  std::string architecture() const {
    std::ostringstream os;
    os << "actor(in=" << cfg_.lowdim_in << ",vis=" << cfg_.vis_dim << ",je=" << cfg_.joint_embed
       << ",h=" << cfg_.hidden << ",act=" << cfg_.n_actions << ",bound=" << cfg_.action_bound
       << ")";
    return os.str();
  }

  VecX<S> params;

 private:
  ActorConfig cfg_;
  Layout layout_;
  DenseIds je_, fc1_, fc2_, head_;
};

// Log density of the squashed action tanh(pre)*bound under the Gaussian on
// pre, including the change-of-variables correction.
template <typename S>
VecX<S> logprob_of_pre(const Dist<S>& d, const MatX<S>& pre, double bound) {
  const MatX<S> eps = ((pre - d.mu).array() / d.logstd.array().exp()).matrix();
  const MatX<S> t = pre.array().tanh().matrix();
  const MatX<S> per_elem = (-S(0.5) * eps.array().square() - d.logstd.array() -
                            S(0.5 * std::log(2.0 * M_PI)) -
                            (S(bound) * (S(1) - t.array().square()) + S(kSquashEps)).log())
                               .matrix();
  return per_elem.colwise().sum().transpose();
}

template <typename S>
SampledAction<S> sample_squashed(const Dist<S>& d, double bound, Rng& rng) {
  SampledAction<S> out;
  out.eps.resize(d.mu.rows(), d.mu.cols());
  std::normal_distribution<double> n(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.eps.size(); ++i) out.eps.data()[i] = static_cast<S>(n(rng));
  out.pre = d.mu + (d.logstd.array().exp() * out.eps.array()).matrix();
  out.action = S(bound) * out.pre.array().tanh().matrix();
  out.logprob = logprob_of_pre(d, out.pre, bound);
  return out;
}

template <typename S>
MatX<S> deterministic_action(const Dist<S>& d, double bound) {
  return S(bound) * d.mu.array().tanh().matrix();
}

// Chain rule through action = tanh(mu + sigma*eps) * bound for a loss with
// per-element action gradient dL_da and per-sample logprob weight w_lp.
template <typename S>
struct SquashedGrad {
  MatX<S> dmu;
  MatX<S> dlogstd;
};

template <typename S>
SquashedGrad<S> squashed_backward(const Dist<S>& d, const SampledAction<S>& s,
                                  const MatX<S>& dL_da, const VecX<S>& w_lp, double bound) {
  const MatX<S> t = s.pre.array().tanh().matrix();
  const MatX<S> one_m_t2 = (S(1) - t.array().square()).matrix();
  const MatX<S> u = (S(bound) * one_m_t2.array() + S(kSquashEps)).matrix();
  const MatX<S> sigma_eps = (d.logstd.array().exp() * s.eps.array()).matrix();
  const MatX<S> wlp = w_lp.transpose().replicate(s.pre.rows(), 1);

  const MatX<S> dlogp_dpre =
      (S(2) * t.array() * one_m_t2.array() * S(bound) / u.array()).matrix();
  const MatX<S> dpre =
      (dL_da.array() * S(bound) * one_m_t2.array() + wlp.array() * dlogp_dpre.array()).matrix();
  SquashedGrad<S> g;
  g.dmu = dpre;
  g.dlogstd = (dpre.array() * sigma_eps.array() - wlp.array()).matrix();
  return g;
}

// ---- Q critic ---------------------------------------------------------------

struct CriticConfig {
  int lowdim_in = 7;
  int vis_dim = 0;
  int joint_embed = 64;
  int hidden = 256;
  int n_actions = 4;
  bool zero_init_head = false;
};

template <typename S>
class QCritic {
 public:
  struct Cache {
    MatX<S> low_in, vis_in, act_in, je_pre, je_out, cat, fc1_pre, fc1_out, fc2_pre, fc2_out;
  };

  QCritic(const CriticConfig& cfg, Rng& rng) : cfg_(cfg) {
    je_ = add_dense(layout_, cfg.lowdim_in, cfg.joint_embed);
    fc1_ = add_dense(layout_, cfg.joint_embed + cfg.vis_dim + cfg.n_actions, cfg.hidden);
    fc2_ = add_dense(layout_, cfg.hidden, cfg.hidden);
    head_ = add_dense(layout_, cfg.hidden, 1);
    params = VecX<S>::Zero(layout_.size());
    he_uniform_init(layout_, params, je_.W, je_.b, rng);
    he_uniform_init(layout_, params, fc1_.W, fc1_.b, rng);
    he_uniform_init(layout_, params, fc2_.W, fc2_.b, rng);
    if (!cfg.zero_init_head) small_uniform_init(layout_, params, head_.W, head_.b, rng);
  }

  // Returns 1 x B row of Q values.
  MatX<S> forward(const VecX<S>& p, const MatX<S>& lowdim, const MatX<S>& vis,
                  const MatX<S>& action, Cache* cache) const {
    if (lowdim.rows() != cfg_.lowdim_in || action.rows() != cfg_.n_actions ||
        vis.rows() != cfg_.vis_dim)
      throw std::invalid_argument("critic: input shape mismatch");
    Cache local;
    Cache& c = cache ? *cache : local;
    c.low_in = lowdim;
    c.vis_in = vis;
    c.act_in = action;
    c.je_pre = dense_fwd(layout_, p, je_, lowdim);
    c.je_out = relu(c.je_pre);
    c.cat.resize(cfg_.joint_embed + cfg_.vis_dim + cfg_.n_actions, lowdim.cols());
    c.cat.topRows(cfg_.joint_embed) = c.je_out;
    if (cfg_.vis_dim > 0) c.cat.middleRows(cfg_.joint_embed, cfg_.vis_dim) = vis;
    c.cat.bottomRows(cfg_.n_actions) = action;
    c.fc1_pre = dense_fwd(layout_, p, fc1_, c.cat);
    c.fc1_out = relu(c.fc1_pre);
    c.fc2_pre = dense_fwd(layout_, p, fc2_, c.fc1_out);
    c.fc2_out = relu(c.fc2_pre);
    return dense_fwd(layout_, p, head_, c.fc2_out);
  }

  void backward(const VecX<S>& p, const Cache& c, const MatX<S>& dq, VecX<S>& grad,
                MatX<S>* dvis = nullptr, MatX<S>* daction = nullptr) const {
    MatX<S> dfc2_out = dense_bwd(layout_, p, head_, c.fc2_out, dq, grad);
    MatX<S> dfc2_pre = relu_bwd(c.fc2_pre, dfc2_out);
    MatX<S> dfc1_out = dense_bwd(layout_, p, fc2_, c.fc1_out, dfc2_pre, grad);
    MatX<S> dfc1_pre = relu_bwd(c.fc1_pre, dfc1_out);
    MatX<S> dcat = dense_bwd(layout_, p, fc1_, c.cat, dfc1_pre, grad);
    if (dvis && cfg_.vis_dim > 0) *dvis = dcat.middleRows(cfg_.joint_embed, cfg_.vis_dim);
    if (daction) *daction = dcat.bottomRows(cfg_.n_actions);
    MatX<S> dje_pre = relu_bwd(c.je_pre, MatX<S>(dcat.topRows(cfg_.joint_embed)));
    dense_bwd(layout_, p, je_, c.low_in, dje_pre, grad);
  }

  Eigen::Index param_count() const { return layout_.size(); }
  const Layout& layout() const { return layout_; }
  const CriticConfig& config() const { return cfg_; }

  std::string architecture() const {
    std::ostringstream os;
    os << "critic(in=" << cfg_.lowdim_in << ",vis=" << cfg_.vis_dim << ",je=" << cfg_.joint_embed
       << ",h=" << cfg_.hidden << ",act=" << cfg_.n_actions << ")";
    return os.str();
  }

  VecX<S> params;

 private:
  CriticConfig cfg_;
  Layout layout_;
  DenseIds je_, fc1_, fc2_, head_;
};

}  // namespace armrl::net
