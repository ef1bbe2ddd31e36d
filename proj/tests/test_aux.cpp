#include <doctest.h>

#include "armrl/net/modules.hpp"
#include "armrl/repr/augment.hpp"
#include "armrl/repr/losses.hpp"
#include "support/gradcheck.hpp"

using namespace armrl;
using namespace armrl::repr;
using net::MatX;
using net::VecX;

namespace {

AuxConfig tiny_aux() {
  AuxConfig cfg;
  cfg.embed_dim = 4;
  cfg.view_feat_dim = 5;
  cfg.n_actions = 2;
  cfg.collision_hidden = 6;
  return cfg;
}

render::ObservationImage random_obs(int H, int W, Rng& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  render::ObservationImage img;
  img.depth.resize(H, W);
  img.arm_mask.resize(H, W);
  img.obstacle_mask.resize(H, W);
  img.goal_mask.resize(H, W);
  for (int ch = 0; ch < 4; ++ch) {
    auto& m = const_cast<Eigen::MatrixXf&>(img.channel(ch));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  }
  return img;
}

}  // namespace

TEST_CASE("random crop augment") {
  Rng rng(1);
  const auto img = random_obs(16, 16, rng);
  SUBCASE("padding zero is the identity") {
    const auto out = random_crop_augment(img, rng, 0);
    CHECK((out.depth - img.depth).cwiseAbs().maxCoeff() == 0.0f);
  }
  SUBCASE("shape preserved for all draws") {
    for (int i = 0; i < 20; ++i) {
      const auto out = random_crop_augment(img, rng, 4);
      CHECK(out.depth.rows() == 16);
      CHECK(out.depth.cols() == 16);
      CHECK(out.goal_mask.rows() == 16);
    }
  }
  SUBCASE("constant image stays constant") {
    render::ObservationImage c;
    c.depth = Eigen::MatrixXf::Constant(16, 16, 0.37f);
    c.arm_mask = c.obstacle_mask = c.goal_mask = c.depth;
    const auto out = random_crop_augment(c, rng, 4);
    CHECK((out.depth.array() == 0.37f).all());
  }
}

TEST_CASE("curl loss") {
  Rng rng(2);
  const AuxConfig cfg = tiny_aux();
  AuxHeads<double> aux(cfg, rng);

  SUBCASE("identical embeddings give ln B") {
    const int B = 7;
    const MatX<double> q = MatX<double>::Ones(cfg.embed_dim, B);
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    const double loss = aux.curl_loss(aux.params, q, q, grad, nullptr);
    CHECK(loss == doctest::Approx(std::log(double(B))).epsilon(1e-12));
  }
  SUBCASE("strongly separated logits give near-zero loss") {
    MatX<double> q = MatX<double>::Zero(4, 2), k = MatX<double>::Zero(4, 2);
    q(0, 0) = 1.0;
    q(1, 1) = 1.0;
    k(0, 0) = 10.0;
    k(1, 0) = -10.0;
    k(0, 1) = -10.0;
    k(1, 1) = 10.0;
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    const double loss = aux.curl_loss(aux.params, q, k, grad, nullptr);  // W = identity
    CHECK(loss < 1e-6);
  }
  SUBCASE("batch below two is rejected") {
    const MatX<double> q = MatX<double>::Ones(cfg.embed_dim, 1);
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    CHECK_THROWS_AS(aux.curl_loss(aux.params, q, q, grad, nullptr), std::invalid_argument);
  }
  SUBCASE("gradients match finite differences") {
    testing::jitter_params(aux.params, rng, 0.1);
    MatX<double> q = MatX<double>::Random(cfg.embed_dim, 5);
    const MatX<double> k = MatX<double>::Random(cfg.embed_dim, 5);
    auto loss = [&](const VecX<double>& p) {
      VecX<double> g = VecX<double>::Zero(aux.param_count());
      return aux.curl_loss(p, q, k, g, nullptr);
    };
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    MatX<double> dq;
    aux.curl_loss(aux.params, q, k, grad, &dq);
    const auto res = testing::gradcheck(aux.params, loss, grad, 1e-6, 200);
    CHECK(res.max_rel_error < 1e-4);
    // query gradient
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      const double orig = q.data()[i];
      q.data()[i] = orig + h;
      VecX<double> g1 = VecX<double>::Zero(aux.param_count());
      const double lp = aux.curl_loss(aux.params, q, k, g1, nullptr);
      q.data()[i] = orig - h;
      VecX<double> g2 = VecX<double>::Zero(aux.param_count());
      const double lm = aux.curl_loss(aux.params, q, k, g2, nullptr);
      q.data()[i] = orig;
      const double fd = (lp - lm) / (2 * h);
      CHECK(std::abs(fd - dq.data()[i]) / std::max(1e-6, std::abs(fd) + std::abs(dq.data()[i])) <
            1e-4);
    }
  }
}

TEST_CASE("cross-view loss") {
  Rng rng(3);
  const AuxConfig cfg = tiny_aux();
  AuxHeads<double> aux(cfg, rng);
  const int B = 5;

  SUBCASE("identical embeddings give ln B") {
    std::vector<MatX<double>> feats(3, MatX<double>::Ones(cfg.view_feat_dim, B));
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    const double loss = aux.cross_view_loss(aux.params, feats, grad, nullptr);
    CHECK(loss == doctest::Approx(std::log(double(B))).epsilon(1e-12));
  }
  SUBCASE("separable scenes drive the loss to zero") {
    std::vector<MatX<double>> feats(2, MatX<double>::Zero(cfg.view_feat_dim, B));
    for (int i = 0; i < B; ++i) {
      feats[0](i, i) = 6.0;  // unique direction per scene, shared across views
      feats[1](i, i) = 6.0;
    }
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    const double loss = aux.cross_view_loss(aux.params, feats, grad, nullptr);
    CHECK(loss < 1e-6);
  }
  SUBCASE("invariant to scene permutation") {
    std::vector<MatX<double>> feats;
    feats.push_back(MatX<double>::Random(cfg.view_feat_dim, B));
    feats.push_back(MatX<double>::Random(cfg.view_feat_dim, B));
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    const double base = aux.cross_view_loss(aux.params, feats, grad, nullptr);
    std::vector<int> perm{3, 1, 4, 0, 2};
    std::vector<MatX<double>> shuffled(2, MatX<double>(cfg.view_feat_dim, B));
    for (int v = 0; v < 2; ++v)
      for (int i = 0; i < B; ++i) shuffled[v].col(i) = feats[v].col(perm[i]);
    const double permuted = aux.cross_view_loss(aux.params, shuffled, grad, nullptr);
    CHECK(permuted == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("gradients match finite differences") {
    testing::jitter_params(aux.params, rng, 0.1);
    std::vector<MatX<double>> feats;
    feats.push_back(MatX<double>::Random(cfg.view_feat_dim, 4));
    feats.push_back(MatX<double>::Random(cfg.view_feat_dim, 4));
    auto loss = [&](const VecX<double>& p) {
      VecX<double> g = VecX<double>::Zero(aux.param_count());
      return aux.cross_view_loss(p, feats, g, nullptr);
    };
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    std::vector<MatX<double>> dfeats;
    aux.cross_view_loss(aux.params, feats, grad, &dfeats);
    const auto res = testing::gradcheck(aux.params, loss, grad, 1e-6, 200);
    CHECK(res.max_rel_error < 1e-4);
    // feature gradients
    const double h = 1e-6;
    VecX<double> sink = VecX<double>::Zero(aux.param_count());
    for (int v = 0; v < 2; ++v) {
      for (Eigen::Index i = 0; i < feats[v].size(); i += 3) {
        const double orig = feats[v].data()[i];
        feats[v].data()[i] = orig + h;
        const double lp = aux.cross_view_loss(aux.params, feats, sink, nullptr);
        feats[v].data()[i] = orig - h;
        const double lm = aux.cross_view_loss(aux.params, feats, sink, nullptr);
        feats[v].data()[i] = orig;
        const double fd = (lp - lm) / (2 * h);
        const double an = dfeats[static_cast<size_t>(v)].data()[i];
        CHECK(std::abs(fd - an) / std::max(1e-6, std::abs(fd) + std::abs(an)) < 1e-4);
      }
    }
  }
}

TEST_CASE("collision dynamics loss") {
  Rng rng(4);
  const AuxConfig cfg = tiny_aux();

  SUBCASE("zero logits on a balanced batch give ln 2") {
    AuxHeads<double> aux(cfg, rng);
    aux.params.setZero();
    const int B = 8;
    const MatX<double> z = MatX<double>::Random(cfg.embed_dim, B);
    const MatX<double> a = MatX<double>::Random(cfg.n_actions, B);
    VecX<double> labels(B);
    for (int i = 0; i < B; ++i) labels[i] = i % 2;
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    const double loss = aux.collision_loss(aux.params, z, a, labels, true, grad, nullptr);
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("separable toy batch trains below 0.05") {
    AuxHeads<double> aux(cfg, rng);
    const int B = 32;
    MatX<double> z(cfg.embed_dim, B);
    MatX<double> a = MatX<double>::Zero(cfg.n_actions, B);
    VecX<double> labels(B);
    for (int i = 0; i < B; ++i) {
      labels[i] = i % 2;
      z.col(i).setConstant(labels[i] > 0.5 ? 1.0 : -1.0);
    }
    net::Adam<double> opt(3e-3);
    double loss = 0;
    for (int it = 0; it < 500; ++it) {
      VecX<double> grad = VecX<double>::Zero(aux.param_count());
      loss = aux.collision_loss(aux.params, z, a, labels, false, grad, nullptr);
      opt.step(aux.params, grad);
    }
    CHECK(loss < 0.05);
  }
  SUBCASE("gradients match finite differences") {
    AuxHeads<double> aux(cfg, rng);
    testing::jitter_params(aux.params, rng, 0.1);
    const int B = 6;
    MatX<double> z = MatX<double>::Random(cfg.embed_dim, B);
    const MatX<double> a = MatX<double>::Random(cfg.n_actions, B);
    VecX<double> labels(B);
    for (int i = 0; i < B; ++i) labels[i] = (i * 7 % 3) == 0;
    auto loss = [&](const VecX<double>& p) {
      VecX<double> g = VecX<double>::Zero(aux.param_count());
      return aux.collision_loss(p, z, a, labels, true, g, nullptr);
    };
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    MatX<double> dz;
    aux.collision_loss(aux.params, z, a, labels, true, grad, &dz);
    const auto res = testing::gradcheck(aux.params, loss, grad, 1e-6, 200);
    CHECK(res.max_rel_error < 1e-4);
  }
}

TEST_CASE("view dropout") {
  Rng rng(5);
  std::vector<render::ObservationImage> views;
  for (int v = 0; v < 3; ++v) views.push_back(random_obs(8, 8, rng));

  SUBCASE("p = 0 is the identity") {
    const auto out = view_dropout(views, rng, 0.0);
    for (int v = 0; v < 3; ++v)
      CHECK((out[v].depth - views[v].depth).cwiseAbs().maxCoeff() == 0.0f);
  }
  SUBCASE("p = 1 retains exactly one view") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto out = view_dropout(views, rng, 1.0);
      int alive = 0;
      for (int v = 0; v < 3; ++v)
        if (out[v].depth.cwiseAbs().maxCoeff() > 0.0f) ++alive;
      CHECK(alive == 1);
    }
  }
  SUBCASE("empirical drop frequency matches p under the retention rule") {
    const double p = 0.3;
    const int N = 10000;
    std::vector<int> dropped(3, 0);
    for (int i = 0; i < N; ++i) {
      const auto out = view_dropout(views, rng, p);
      for (int v = 0; v < 3; ++v)
        if (out[v].depth.cwiseAbs().maxCoeff() == 0.0f) ++dropped[v];
    }
    const double expect = p - p * p * p / 3.0;  // all-dropped event spares one
    for (int v = 0; v < 3; ++v) {
      CHECK(std::abs(double(dropped[v]) / N - expect) < 0.02);
    }
  }
  SUBCASE("batch variant keeps at least one view per sample") {
    std::vector<net::MatX<float>> batch(3, net::MatX<float>::Ones(10, 64));
    view_dropout_batch(batch, rng, 1.0);
    for (int s = 0; s < 64; ++s) {
      int alive = 0;
      for (int v = 0; v < 3; ++v)
        if (batch[v].col(s).cwiseAbs().maxCoeff() > 0.0f) ++alive;
      CHECK(alive == 1);
    }
  }
}

TEST_CASE("hidden view prediction loss") {
  Rng rng(6);
  AuxConfig cfg = tiny_aux();
  cfg.hidden_view = true;
  cfg.img_channels = 2;
  cfg.img_h = 16;
  cfg.img_w = 16;
  AuxHeads<double> aux(cfg, rng);
  const int B = 3;
  const MatX<double> z = MatX<double>::Random(cfg.embed_dim, B);
  const Eigen::Index target_size = Eigen::Index(cfg.img_channels) * (cfg.img_h / 4) * (cfg.img_w / 4);

  SUBCASE("target equal to the decode gives zero loss") {
    // run the decoder by calling the loss with an arbitrary target, then reuse
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    const MatX<double> zero_target = MatX<double>::Zero(target_size, B);
    const double l0 = aux.hidden_view_loss(aux.params, z, zero_target, grad, nullptr);
    // loss with zero target equals mean square of the decode; reconstruct it
    // by optimizing nothing: decode = sqrt(l0 * size) scale check only
    CHECK(l0 >= 0.0);
  }
  SUBCASE("zero decoder against a known target equals mean squared pixels") {
    AuxHeads<double> zeroed(cfg, rng);
    zeroed.params.setZero();
    MatX<double> target = MatX<double>::Random(target_size, B);
    VecX<double> grad = VecX<double>::Zero(zeroed.param_count());
    const double loss = zeroed.hidden_view_loss(zeroed.params, z, target, grad, nullptr);
    CHECK(loss == doctest::Approx(target.squaredNorm() / double(target.size())).epsilon(1e-12));
  }
  SUBCASE("disabled head throws") {
    AuxConfig off = tiny_aux();
    AuxHeads<double> aux_off(off, rng);
    VecX<double> grad = VecX<double>::Zero(aux_off.param_count());
    CHECK_THROWS_AS(
        aux_off.hidden_view_loss(aux_off.params, z, MatX<double>::Zero(4, B), grad, nullptr),
        std::logic_error);
  }
  SUBCASE("gradients match finite differences") {
    testing::jitter_params(aux.params, rng, 0.05);
    const MatX<double> target = MatX<double>::Random(target_size, B);
    auto loss = [&](const VecX<double>& p) {
      VecX<double> g = VecX<double>::Zero(aux.param_count());
      return aux.hidden_view_loss(p, z, target, g, nullptr);
    };
    VecX<double> grad = VecX<double>::Zero(aux.param_count());
    aux.hidden_view_loss(aux.params, z, target, grad, nullptr);
    const auto res = testing::gradcheck(aux.params, loss, grad, 1e-6, 250);
    CHECK(res.max_rel_error < 1e-4);
  }
}

TEST_CASE("momentum encoder is an EMA") {
  repr::MomentumEncoder<double> mom;
  mom.params = VecX<double>::Zero(4);
  mom.m = 0.01;
  const VecX<double> online = VecX<double>::Ones(4);
  mom.update(online);
  CHECK(mom.params[0] == doctest::Approx(0.01));
  mom.update(online);
  CHECK(mom.params[0] == doctest::Approx(0.0199));
}

TEST_CASE("exact first-decode identity for hidden view") {
  // decode(z) compared against itself must give exactly zero loss
  Rng rng(8);
  AuxConfig cfg = tiny_aux();
  cfg.hidden_view = true;
  cfg.img_channels = 1;
  cfg.img_h = 16;
  cfg.img_w = 16;
  AuxHeads<double> aux(cfg, rng);
  const MatX<double> z = MatX<double>::Random(cfg.embed_dim, 2);
  const Eigen::Index target_size = 1 * (cfg.img_h / 4) * (cfg.img_w / 4);

  // binary search: loss(target) = mean((decode - target)^2); find decode via
  // gradient of loss at target=0: d loss/d target = -2 decode / size
  VecX<double> grad = VecX<double>::Zero(aux.param_count());
  const MatX<double> zero_t = MatX<double>::Zero(target_size, 2);
  const double l0 = aux.hidden_view_loss(aux.params, z, zero_t, grad, nullptr);
  // reconstruct decode numerically: loss(t) = l0 - 2<decode,t>/N + |t|^2/N
  MatX<double> decode(target_size, 2);
  for (Eigen::Index i = 0; i < decode.size(); ++i) {
    MatX<double> t = zero_t;
    t.data()[i] = 1.0;
    VecX<double> g = VecX<double>::Zero(aux.param_count());
    const double li = aux.hidden_view_loss(aux.params, z, t, g, nullptr);
    decode.data()[i] = -(li - l0 - 1.0 / double(decode.size())) * double(decode.size()) / 2.0;
  }
  VecX<double> g = VecX<double>::Zero(aux.param_count());
  const double lfit = aux.hidden_view_loss(aux.params, z, decode, g, nullptr);
  CHECK(lfit < 1e-20);
}
