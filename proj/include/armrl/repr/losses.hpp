#pragma once

#include "armrl/net/core.hpp"

namespace armrl::repr {

using net::Layout;
using net::MatX;
using net::VecX;

struct ContrastiveConfig {
  int crop_padding = 4;
  double momentum = 0.01;  // momentum-encoder EMA coefficient per update
  double lambda_curl = 1.0;
  double lambda_view = 1.0;
  double lambda_dyn = 0.5;
  double lambda_hidden = 0.0;  // hidden-view head off by default
  bool collision_pos_weighting = true;
};

struct AuxConfig {
  int embed_dim = 64;
  Eigen::Index view_feat_dim = 288;
  int n_actions = 4;
  int collision_hidden = 128;
  bool hidden_view = false;
  int img_channels = 4;
  int img_h = 48;
  int img_w = 48;
};

namespace detail {

// dloss/dlogits for InfoNCE with diagonal labels, mean over rows.
template <typename S>
MatX<S> infonce_grad(const MatX<S>& logits, S* loss_out) {
  const Eigen::Index B = logits.rows();
  MatX<S> G(B, B);
  S loss = 0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const S m = logits.row(i).maxCoeff();
    const VecX<S> e = (logits.row(i).array() - m).exp().matrix().transpose();
    const S Z = e.sum();
    loss += -(logits(i, i) - m) + std::log(Z);
    G.row(i) = (e / Z).transpose();
    G(i, i) -= S(1);
  }
  G /= S(B);
  if (loss_out) *loss_out = loss / S(B);
  return G;
}

}  // namespace detail

// Bilinear-similarity heads, collision-dynamics predictor and the optional
// hidden-view decoder, in one flat parameter group.
template <typename S>
class AuxHeads {
 public:
  AuxHeads(const AuxConfig& cfg, net::Rng& rng) : cfg_(cfg) {
    curl_W_ = layout_.add(cfg.embed_dim, cfg.embed_dim);
    view_W_ = layout_.add(cfg.view_feat_dim, cfg.view_feat_dim);
    col1_ = net::add_dense(layout_, cfg.embed_dim + cfg.n_actions, cfg.collision_hidden);
    col2_ = net::add_dense(layout_, cfg.collision_hidden, cfg.collision_hidden);
    col3_ = net::add_dense(layout_, cfg.collision_hidden, 1);
    if (cfg.hidden_view) {
      dec_h8_ = cfg.img_h / 8;
      dec_w8_ = cfg.img_w / 8;
      dec_fc_ = net::add_dense(layout_, cfg.embed_dim, Eigen::Index(8) * dec_h8_ * dec_w8_);
      net::ConvSpec sp;
      sp.cin = 8;
      sp.cout = cfg.img_channels;
      sp.hin = dec_h8_ * 2;
      sp.win = dec_w8_ * 2;
      sp.stride = 1;
      dec_conv_ = net::add_conv(layout_, sp);
    }
    params = VecX<S>::Zero(layout_.size());
    layout_.mat(params, curl_W_).setIdentity();
    layout_.mat(params, view_W_).setIdentity();
    net::he_uniform_init(layout_, params, col1_.W, col1_.b, rng);
    net::he_uniform_init(layout_, params, col2_.W, col2_.b, rng);
    net::small_uniform_init(layout_, params, col3_.W, col3_.b, rng);
    if (cfg.hidden_view) {
      net::he_uniform_init(layout_, params, dec_fc_.W, dec_fc_.b, rng);
      net::he_uniform_init(layout_, params, dec_conv_.W, dec_conv_.b, rng);
    }
  }

  // InfoNCE over q_i' W k_j with diagonal labels; keys carry no gradient.
  S curl_loss(const VecX<S>& p, const MatX<S>& queries, const MatX<S>& keys, VecX<S>& grad,
              MatX<S>* dqueries) const {
    const Eigen::Index B = queries.cols();
    if (B < 2) throw std::invalid_argument("curl_loss: batch must have at least 2 samples");
    const auto W = layout_.mat(p, curl_W_);
    const MatX<S> logits = queries.transpose() * W * keys;
    S loss;
    const MatX<S> G = detail::infonce_grad(logits, &loss);
    layout_.mat(grad, curl_W_) += queries * G * keys.transpose();
    if (dqueries) *dqueries = W * keys * G.transpose();
    return loss;
  }

  // Symmetric InfoNCE across ordered view pairs of the same scene batch.
  S cross_view_loss(const VecX<S>& p, const std::vector<MatX<S>>& feats, VecX<S>& grad,
                    std::vector<MatX<S>>* dfeats) const {
    const size_t V = feats.size();
    if (V < 2) throw std::invalid_argument("cross_view_loss: need at least 2 views");
    if (feats[0].cols() < 2) throw std::invalid_argument("cross_view_loss: batch too small");
    if (dfeats) {
      dfeats->assign(V, MatX<S>::Zero(feats[0].rows(), feats[0].cols()));
    }
    const auto W = layout_.mat(p, view_W_);
    const S scale = S(1) / S(V * (V - 1));
    S total = 0;
    for (size_t a = 0; a < V; ++a) {
      for (size_t b = 0; b < V; ++b) {
        if (a == b) continue;
        const MatX<S> logits = feats[a].transpose() * W * feats[b];
        S loss;
        const MatX<S> G = detail::infonce_grad(logits, &loss);
        total += loss * scale;
        layout_.mat(grad, view_W_) += scale * feats[a] * G * feats[b].transpose();
        if (dfeats) {
          (*dfeats)[a] += scale * W * feats[b] * G.transpose();
          (*dfeats)[b] += scale * W.transpose() * feats[a] * G;
        }
      }
    }
    return total;
  }

  // Binary cross-entropy on collision logits from [z ; a].
  S collision_loss(const VecX<S>& p, const MatX<S>& z, const MatX<S>& actions,
                   const VecX<S>& labels, bool pos_weighting, VecX<S>& grad,
                   MatX<S>* dz) const {
    const Eigen::Index B = z.cols();
    MatX<S> x(cfg_.embed_dim + cfg_.n_actions, B);
    x.topRows(cfg_.embed_dim) = z;
    x.bottomRows(cfg_.n_actions) = actions;
    const MatX<S> h1_pre = net::dense_fwd(layout_, p, col1_, x);
    const MatX<S> h1 = net::relu(h1_pre);
    const MatX<S> h2_pre = net::dense_fwd(layout_, p, col2_, h1);
    const MatX<S> h2 = net::relu(h2_pre);
    const MatX<S> logit = net::dense_fwd(layout_, p, col3_, h2);  // 1 x B

    S pos_w = 1;
    if (pos_weighting) {
      const S pos = labels.sum();
      const S neg = S(B) - pos;
      pos_w = std::clamp(neg / std::max(pos, S(1)), S(1), S(20));
    }
    S loss = 0;
    MatX<S> dlogit(1, B);
    for (Eigen::Index i = 0; i < B; ++i) {
      const S l = logit(0, i);
      const S y = labels[i];
      const S w = y > S(0.5) ? pos_w : S(1);
      const S softplus = std::max(l, S(0)) + std::log1p(std::exp(-std::abs(l)));
      loss += w * (softplus - y * l);
      const S sig = S(1) / (S(1) + std::exp(-l));
      dlogit(0, i) = w * (sig - y);
    }
    loss /= S(B);
    dlogit /= S(B);

    MatX<S> dh2 = net::dense_bwd(layout_, p, col3_, h2, dlogit, grad);
    MatX<S> dh2_pre = net::relu_bwd(h2_pre, dh2);
    MatX<S> dh1 = net::dense_bwd(layout_, p, col2_, h1, dh2_pre, grad);
    MatX<S> dh1_pre = net::relu_bwd(h1_pre, dh1);
    MatX<S> dx = net::dense_bwd(layout_, p, col1_, x, dh1_pre, grad);
    if (dz) *dz = dx.topRows(cfg_.embed_dim);
    return loss;
  }

  // MSE between a small deconvolutional decode of the fused subset
  // embedding and the held-out view downsampled 4x.
  S hidden_view_loss(const VecX<S>& p, const MatX<S>& z, const MatX<S>& target, VecX<S>& grad,
                     MatX<S>* dz) const {
    if (!cfg_.hidden_view) throw std::logic_error("hidden_view_loss: head disabled");
    const Eigen::Index B = z.cols();
    const MatX<S> fc_pre = net::dense_fwd(layout_, p, dec_fc_, z);
    const MatX<S> fc = net::relu(fc_pre);
    const MatX<S> up = upsample2(fc, 8, dec_h8_, dec_w8_);
    net::ConvCache<S> cache;
    const MatX<S> out = net::conv_fwd(layout_, p, dec_conv_, up, &cache);

    const MatX<S> diff = out - target;
    const S loss = diff.squaredNorm() / S(diff.size());
    const MatX<S> dout = S(2) * diff / S(diff.size());
    MatX<S> dup = net::conv_bwd(layout_, p, dec_conv_, dout, cache, grad);
    MatX<S> dfc = downsample2_sum(dup, 8, dec_h8_, dec_w8_);
    MatX<S> dfc_pre = net::relu_bwd(fc_pre, dfc);
    MatX<S> dzl = net::dense_bwd(layout_, p, dec_fc_, z, dfc_pre, grad);
    if (dz) *dz = dzl;
    return loss;
  }

  Eigen::Index param_count() const { return layout_.size(); }
  const Layout& layout() const { return layout_; }
  const AuxConfig& config() const { return cfg_; }
  int curl_W_id() const { return curl_W_; }
  int view_W_id() const { return view_W_; }
  // [first, last) slice-id ranges, layout order is contiguous per head
  std::pair<int, int> collision_slice_range() const { return {col1_.W, col3_.b + 1}; }
  std::pair<int, int> decoder_slice_range() const {
    return cfg_.hidden_view ? std::make_pair(dec_fc_.W, dec_conv_.b + 1) : std::make_pair(0, 0);
  }

  VecX<S> params;

 private:
  static MatX<S> upsample2(const MatX<S>& X, int ch, int h, int w) {
    MatX<S> Y(Eigen::Index(ch) * 4 * h * w, X.cols());
    for (Eigen::Index s = 0; s < X.cols(); ++s) {
      for (int c = 0; c < ch; ++c) {
        for (int r = 0; r < 2 * h; ++r) {
          for (int cc = 0; cc < 2 * w; ++cc) {
            Y(Eigen::Index(c) * 4 * h * w + Eigen::Index(r) * 2 * w + cc, s) =
                X(Eigen::Index(c) * h * w + Eigen::Index(r / 2) * w + cc / 2, s);
          }
        }
      }
    }
    return Y;
  }
  static MatX<S> downsample2_sum(const MatX<S>& dY, int ch, int h, int w) {
    MatX<S> dX = MatX<S>::Zero(Eigen::Index(ch) * h * w, dY.cols());
    for (Eigen::Index s = 0; s < dY.cols(); ++s) {
      for (int c = 0; c < ch; ++c) {
        for (int r = 0; r < 2 * h; ++r) {
          for (int cc = 0; cc < 2 * w; ++cc) {
            dX(Eigen::Index(c) * h * w + Eigen::Index(r / 2) * w + cc / 2, s) +=
                dY(Eigen::Index(c) * 4 * h * w + Eigen::Index(r) * 2 * w + cc, s);
          }
        }
      }
    }
    return dX;
  }

  AuxConfig cfg_;
  Layout layout_;
  int curl_W_ = -1;
  int view_W_ = -1;
  net::DenseIds col1_, col2_, col3_, dec_fc_;
  net::ConvIds dec_conv_;
  int dec_h8_ = 0, dec_w8_ = 0;
};

// Shadow encoder updated by EMA; used for contrastive keys, never trained.
template <typename S>
struct MomentumEncoder {
  VecX<S> params;
  double m = 0.01;
  void update(const VecX<S>& online) { net::polyak_update(params, online, m); }
};

}  // namespace armrl::repr
