#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace armrl::net {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Vector<S, Eigen::Dynamic>;

using Rng = std::mt19937_64;

// Named slices into a flat parameter vector. One Layout is shared by the
// parameter, gradient and optimizer buffers of a network.
class Layout {
 public:
  struct Slice {
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
  };

  int add(Eigen::Index rows, Eigen::Index cols) {
    slices_.push_back({total_, rows, cols});
    total_ += rows * cols;
    return static_cast<int>(slices_.size()) - 1;
  }
  Eigen::Index size() const { return total_; }
  const Slice& slice(int id) const { return slices_[static_cast<size_t>(id)]; }

  template <typename S>
  Eigen::Map<MatX<S>> mat(VecX<S>& buf, int id) const {
    const Slice& s = slices_[static_cast<size_t>(id)];
    return {buf.data() + s.offset, s.rows, s.cols};
  }
  template <typename S>
  Eigen::Map<const MatX<S>> mat(const VecX<S>& buf, int id) const {
    const Slice& s = slices_[static_cast<size_t>(id)];
    return {buf.data() + s.offset, s.rows, s.cols};
  }
  template <typename S>
  Eigen::Map<VecX<S>> vec(VecX<S>& buf, int id) const {
    const Slice& s = slices_[static_cast<size_t>(id)];
    return {buf.data() + s.offset, s.rows * s.cols};
  }
  template <typename S>
  Eigen::Map<const VecX<S>> vec(const VecX<S>& buf, int id) const {
    const Slice& s = slices_[static_cast<size_t>(id)];
    return {buf.data() + s.offset, s.rows * s.cols};
  }

 private:
  std::vector<Slice> slices_;
  Eigen::Index total_ = 0;
};

struct DenseIds {
  int W = -1;
  int b = -1;
  Eigen::Index in = 0;
  Eigen::Index out = 0;
};

inline DenseIds add_dense(Layout& layout, Eigen::Index in, Eigen::Index out) {
  DenseIds ids;
  ids.W = layout.add(out, in);
  ids.b = layout.add(out, 1);
  ids.in = in;
  ids.out = out;
  return ids;
}

// X is (in x B), one sample per column.
template <typename S>
MatX<S> dense_fwd(const Layout& layout, const VecX<S>& params, const DenseIds& ids,
                  const MatX<S>& X) {
  return (layout.mat(params, ids.W) * X).colwise() + layout.vec(params, ids.b);
}

// Accumulates parameter gradients and returns dX.
template <typename S>
MatX<S> dense_bwd(const Layout& layout, const VecX<S>& params, const DenseIds& ids,
                  const MatX<S>& X, const MatX<S>& dY, VecX<S>& grad) {
  layout.mat(grad, ids.W) += dY * X.transpose();
  layout.vec(grad, ids.b) += dY.rowwise().sum();
  return layout.mat(params, ids.W).transpose() * dY;
}

template <typename S>
MatX<S> relu(const MatX<S>& X) {
  return X.cwiseMax(S(0));
}

template <typename S>
MatX<S> relu_bwd(const MatX<S>& X, const MatX<S>& dY) {
  return ((X.array() > S(0)).template cast<S>() * dY.array()).matrix();
}

// 3x3 stride-2 pad-1 convolution; images are flattened channel-major,
// row-major within a channel, one sample per column.
struct ConvSpec {
  int cin = 0, cout = 0, hin = 0, win = 0;
  int kernel = 3, stride = 2, pad = 1;
  int hout() const { return (hin + 2 * pad - kernel) / stride + 1; }
  int wout() const { return (win + 2 * pad - kernel) / stride + 1; }
  Eigen::Index in_size() const { return Eigen::Index(cin) * hin * win; }
  Eigen::Index out_size() const { return Eigen::Index(cout) * hout() * wout(); }
};

struct ConvIds {
  int W = -1;
  int b = -1;
  ConvSpec spec;
};

inline ConvIds add_conv(Layout& layout, const ConvSpec& spec) {
  ConvIds ids;
  ids.spec = spec;
  ids.W = layout.add(spec.cout, Eigen::Index(spec.cin) * spec.kernel * spec.kernel);
  ids.b = layout.add(spec.cout, 1);
  return ids;
}

template <typename S>
MatX<S> im2col(const ConvSpec& sp, const Eigen::Ref<const VecX<S>>& image) {
  const int K = sp.kernel, HO = sp.hout(), WO = sp.wout();
  MatX<S> cols(Eigen::Index(sp.cin) * K * K, Eigen::Index(HO) * WO);
  cols.setZero();
  for (int ci = 0; ci < sp.cin; ++ci) {
    const Eigen::Index base = Eigen::Index(ci) * sp.hin * sp.win;
    for (int kr = 0; kr < K; ++kr) {
      for (int kc = 0; kc < K; ++kc) {
        const Eigen::Index row = (Eigen::Index(ci) * K + kr) * K + kc;
        for (int orow = 0; orow < HO; ++orow) {
          const int ir = orow * sp.stride + kr - sp.pad;
          if (ir < 0 || ir >= sp.hin) continue;
          for (int ocol = 0; ocol < WO; ++ocol) {
            const int ic = ocol * sp.stride + kc - sp.pad;
            if (ic < 0 || ic >= sp.win) continue;
            cols(row, Eigen::Index(orow) * WO + ocol) = image[base + Eigen::Index(ir) * sp.win + ic];
          }
        }
      }
    }
  }
  return cols;
}

template <typename S>
void col2im_add(const ConvSpec& sp, const MatX<S>& dcols, Eigen::Ref<VecX<S>> dimage) {
  const int K = sp.kernel, HO = sp.hout(), WO = sp.wout();
  for (int ci = 0; ci < sp.cin; ++ci) {
    const Eigen::Index base = Eigen::Index(ci) * sp.hin * sp.win;
    for (int kr = 0; kr < K; ++kr) {
      for (int kc = 0; kc < K; ++kc) {
        const Eigen::Index row = (Eigen::Index(ci) * K + kr) * K + kc;
        for (int orow = 0; orow < HO; ++orow) {
          const int ir = orow * sp.stride + kr - sp.pad;
          if (ir < 0 || ir >= sp.hin) continue;
          for (int ocol = 0; ocol < WO; ++ocol) {
            const int ic = ocol * sp.stride + kc - sp.pad;
            if (ic < 0 || ic >= sp.win) continue;
            dimage[base + Eigen::Index(ir) * sp.win + ic] += dcols(row, Eigen::Index(orow) * WO + ocol);
          }
        }
      }
    }
  }
}

// Batched conv forward; caches the im2col matrices for the backward pass.
template <typename S>
struct ConvCache {
  std::vector<MatX<S>> cols;  // one per sample
};

template <typename S>
MatX<S> conv_fwd(const Layout& layout, const VecX<S>& params, const ConvIds& ids, const MatX<S>& X,
                 ConvCache<S>* cache) {
  const ConvSpec& sp = ids.spec;
  if (X.rows() != sp.in_size()) throw std::invalid_argument("conv_fwd: shape mismatch");
  const Eigen::Index B = X.cols();
  MatX<S> Y(sp.out_size(), B);
  if (cache) cache->cols.resize(static_cast<size_t>(B));
  const auto W = layout.mat(params, ids.W);
  const auto b = layout.vec(params, ids.b);
  for (Eigen::Index s = 0; s < B; ++s) {
    MatX<S> cols = im2col<S>(sp, X.col(s));
    const MatX<S> y = (W * cols).colwise() + b;          // cout x (HO*WO)
    const MatX<S> yt = y.transpose();                    // flatten channel-major
    Y.col(s) = Eigen::Map<const VecX<S>>(yt.data(), yt.size());
    if (cache) cache->cols[static_cast<size_t>(s)] = std::move(cols);
  }
  return Y;
}

template <typename S>
MatX<S> conv_bwd(const Layout& layout, const VecX<S>& params, const ConvIds& ids, const MatX<S>& dY,
                 const ConvCache<S>& cache, VecX<S>& grad) {
  const ConvSpec& sp = ids.spec;
  const Eigen::Index B = dY.cols();
  MatX<S> dX = MatX<S>::Zero(sp.in_size(), B);
  auto dW = layout.mat(grad, ids.W);
  auto db = layout.vec(grad, ids.b);
  const auto W = layout.mat(params, ids.W);
  for (Eigen::Index s = 0; s < B; ++s) {
    Eigen::Map<const MatX<S>> dyt(dY.col(s).data(), Eigen::Index(sp.hout()) * sp.wout(), sp.cout);
    const MatX<S> dy = dyt.transpose();  // back to cout x (HO*WO)
    dW += dy * cache.cols[static_cast<size_t>(s)].transpose();
    db += dy.rowwise().sum();
    const MatX<S> dcols = W.transpose() * dy;
    col2im_add<S>(sp, dcols, dX.col(s));
  }
  return dX;
}

// ---- initialization -------------------------------------------------------

template <typename S>
void he_uniform_init(const Layout& layout, VecX<S>& params, int W_id, int b_id, Rng& rng) {
  auto W = layout.mat(params, W_id);
  const double limit = std::sqrt(6.0 / static_cast<double>(W.cols()));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = static_cast<S>(u(rng));
  layout.vec(params, b_id).setZero();
}

template <typename S>
void small_uniform_init(const Layout& layout, VecX<S>& params, int W_id, int b_id, Rng& rng,
                        double limit = 3e-3) {
  auto W = layout.mat(params, W_id);
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = static_cast<S>(u(rng));
  layout.vec(params, b_id).setZero();
}

// ---- optimizer ------------------------------------------------------------

template <typename S>
class Adam {
 public:
  explicit Adam(double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(VecX<S>& params, const VecX<S>& grad) {
    if (m_.size() != params.size()) {
      m_ = VecX<S>::Zero(params.size());
      v_ = VecX<S>::Zero(params.size());
    }
    ++t_;
    m_ = S(beta1_) * m_ + S(1 - beta1_) * grad;
    v_ = S(beta2_) * v_ + S(1 - beta2_) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    const double alpha = lr_ / bc1;
    params.array() -=
        S(alpha) * m_.array() / ((v_.array() / S(bc2)).sqrt() + S(eps_));
  }

  double lr() const { return lr_; }
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  VecX<S> m_, v_;
};

// ---- parameter utilities --------------------------------------------------

template <typename S>
void polyak_update(VecX<S>& target, const VecX<S>& online, double tau) {
  if (target.size() != online.size())
    throw std::invalid_argument("polyak_update: structure mismatch");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak_update: tau out of (0,1]");
  target = S(1.0 - tau) * target + S(tau) * online;
}

template <typename S>
uint64_t param_hash(const VecX<S>& params) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(params.data());
  const size_t n = static_cast<size_t>(params.size()) * sizeof(S);
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t string_hash(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace armrl::net
