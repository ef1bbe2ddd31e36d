#include <doctest.h>

#include "armrl/net/modules.hpp"
#include "support/gradcheck.hpp"

using namespace armrl;
using namespace armrl::net;

namespace {

EncoderConfig tiny_encoder_config() {
  EncoderConfig cfg;
  cfg.views = 2;
  cfg.channels = 2;
  cfg.height = 8;
  cfg.width = 8;
  cfg.conv_channels = {3, 4};
  cfg.fusion_hidden = 6;
  cfg.embed_dim = 5;
  return cfg;
}

std::vector<MatX<double>> random_images(const EncoderConfig& cfg, Eigen::Index B, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MatX<double>> imgs;
  for (int v = 0; v < cfg.views; ++v) {
    MatX<double> m(Eigen::Index(cfg.channels) * cfg.height * cfg.width, B);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    imgs.push_back(std::move(m));
  }
  return imgs;
}

}  // namespace

TEST_CASE("encoder basics") {
  Rng rng(1);
  const EncoderConfig cfg = tiny_encoder_config();
  MultiViewEncoder<double> enc(cfg, rng);
  const auto imgs = random_images(cfg, 3, rng);

  SUBCASE("zero images with zero biases give a zero embedding") {
    std::vector<MatX<double>> zero;
    for (int v = 0; v < cfg.views; ++v)
      zero.push_back(MatX<double>::Zero(Eigen::Index(cfg.channels) * cfg.height * cfg.width, 2));
    // biases are zero-initialized; weights arbitrary
    const MatX<double> z = enc.forward(enc.params, zero, nullptr);
    CHECK(z.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("deterministic") {
    const MatX<double> a = enc.forward(enc.params, imgs, nullptr);
    const MatX<double> b = enc.forward(enc.params, imgs, nullptr);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("sensitive to a moved pixel block") {
    auto moved = imgs;
    moved[0].block(0, 0, 8, 1).swap(moved[0].block(32, 0, 8, 1));
    const MatX<double> a = enc.forward(enc.params, imgs, nullptr);
    const MatX<double> b = enc.forward(enc.params, moved, nullptr);
    CHECK((a - b).norm() > 0.0);
  }
  SUBCASE("view count mismatch throws") {
    auto bad = imgs;
    bad.pop_back();
    CHECK_THROWS_AS(enc.forward(enc.params, bad, nullptr), std::invalid_argument);
  }
}

TEST_CASE("encoder gradient matches finite differences") {
  Rng rng(2);
  EncoderConfig cfg = tiny_encoder_config();
  cfg.conv_channels = {2, 2};
  cfg.fusion_hidden = 4;
  cfg.embed_dim = 3;
  cfg.height = cfg.width = 6;
  MultiViewEncoder<double> enc(cfg, rng);
  testing::jitter_params(enc.params, rng);
  const auto imgs = random_images(cfg, 2, rng);

  // loss = sum of squares of the embedding
  auto loss = [&](const VecX<double>& p) {
    return enc.forward(p, imgs, nullptr).squaredNorm();
  };
  MultiViewEncoder<double>::Cache cache;
  const MatX<double> z = enc.forward(enc.params, imgs, &cache);
  VecX<double> grad = VecX<double>::Zero(enc.param_count());
  enc.backward(enc.params, cache, 2.0 * z, nullptr, grad);
  const auto res = testing::gradcheck(enc.params, loss, grad, 1e-6, 400);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("encoder cross-view feature gradient path") {
  Rng rng(3);
  EncoderConfig cfg = tiny_encoder_config();
  cfg.height = cfg.width = 6;
  cfg.conv_channels = {2, 2};
  MultiViewEncoder<double> enc(cfg, rng);
  testing::jitter_params(enc.params, rng);
  const auto imgs = random_images(cfg, 2, rng);

  auto loss = [&](const VecX<double>& p) {
    MultiViewEncoder<double>::Cache c;
    const MatX<double> z = enc.forward(p, imgs, &c);
    double l = z.squaredNorm();
    for (const auto& f : c.view_feats) l += 0.5 * f.squaredNorm();
    return l;
  };
  MultiViewEncoder<double>::Cache cache;
  const MatX<double> z = enc.forward(enc.params, imgs, &cache);
  std::vector<MatX<double>> dfeats;
  for (const auto& f : cache.view_feats) dfeats.push_back(f);
  VecX<double> grad = VecX<double>::Zero(enc.param_count());
  enc.backward(enc.params, cache, 2.0 * z, &dfeats, grad);
  const auto res = testing::gradcheck(enc.params, loss, grad, 1e-6, 300);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("actor distribution and sampling") {
  Rng rng(4);
  ActorConfig cfg;
  cfg.lowdim_in = 5;
  cfg.n_actions = 3;
  cfg.joint_embed = 8;
  cfg.hidden = 8;
  cfg.action_bound = 0.05;
  GaussianActor<double> actor(cfg, rng);
  MatX<double> low = MatX<double>::Random(5, 4);

  SUBCASE("deterministic action is tanh(mu) * bound") {
    const auto d = actor.forward(actor.params, low, MatX<double>(0, 4), nullptr);
    const MatX<double> a = deterministic_action(d, cfg.action_bound);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      CHECK(a.data()[i] == doctest::Approx(0.05 * std::tanh(d.mu.data()[i])).epsilon(1e-12));
    }
    CHECK(a.cwiseAbs().maxCoeff() < cfg.action_bound);
    // repeatable bit-for-bit through the same code path
    const MatX<double> again = deterministic_action(d, cfg.action_bound);
    CHECK((a - again).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("samples stay strictly inside the bound") {
    const auto d = actor.forward(actor.params, low, MatX<double>(0, 4), nullptr);
    for (int i = 0; i < 50; ++i) {
      const auto s = sample_squashed(d, cfg.action_bound, rng);
      CHECK(s.action.cwiseAbs().maxCoeff() < cfg.action_bound);
    }
  }
  SUBCASE("sigma -> 0 limit approaches the deterministic action") {
    Dist<double> d;
    d.mu = MatX<double>::Constant(1, 1, 0.7);
    d.logstd = MatX<double>::Constant(1, 1, -10.0);
    const auto s = sample_squashed(d, cfg.action_bound, rng);
    CHECK(std::abs(s.action(0, 0) - 0.05 * std::tanh(0.7)) < 1e-5);
  }
}

TEST_CASE("squashed log-prob integrates to one (quadrature oracle)") {
  Dist<double> d;
  d.mu = MatX<double>::Constant(1, 1, 0.4);
  d.logstd = MatX<double>::Constant(1, 1, std::log(0.8));
  const double bound = 0.05;
  const double sigma = 0.8;
  // integrate the action density via the pre-squash variable:
  // p_a(a(u)) * da/du, da/du = bound * (1 - tanh(u)^2)
  const double lo = 0.4 - 10.0 * sigma, hi = 0.4 + 10.0 * sigma;
  const int N = 4000;  // Simpson: even interval count
  const double h = (hi - lo) / N;
  double integral = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double u = lo + i * h;
    MatX<double> pre = MatX<double>::Constant(1, 1, u);
    const double logp = logprob_of_pre(d, pre, bound)[0];
    const double dadu = bound * (1.0 - std::tanh(u) * std::tanh(u));
    const double f = std::exp(logp) * dadu;
    integral += (i == 0 || i == N) ? f : (i % 2 ? 4.0 * f : 2.0 * f);
  }
  integral *= h / 3.0;
  CHECK(std::abs(integral - 1.0) < 1e-3);
}

TEST_CASE("critic basics") {
  Rng rng(5);
  CriticConfig cfg;
  cfg.lowdim_in = 5;
  cfg.n_actions = 3;
  cfg.joint_embed = 8;
  cfg.hidden = 8;

  SUBCASE("zero-initialized head yields zero Q") {
    cfg.zero_init_head = true;
    QCritic<double> q1(cfg, rng), q2(cfg, rng);
    const MatX<double> low = MatX<double>::Random(5, 6);
    const MatX<double> act = MatX<double>::Random(3, 6);
    const MatX<double> a = q1.forward(q1.params, low, MatX<double>(0, 6), act, nullptr);
    const MatX<double> b = q2.forward(q2.params, low, MatX<double>(0, 6), act, nullptr);
    CHECK(a.cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.cwiseMin(b) - a).cwiseAbs().maxCoeff() == 0.0);  // elementwise min
  }
  SUBCASE("gradient w.r.t. action matches finite differences") {
    QCritic<double> q(cfg, rng);
    const MatX<double> low = MatX<double>::Random(5, 2);
    MatX<double> act = MatX<double>::Random(3, 2) * 0.04;
    auto loss = [&](const MatX<double>& a) {
      return q.forward(q.params, low, MatX<double>(0, 2), a, nullptr).sum();
    };
    QCritic<double>::Cache cache;
    q.forward(q.params, low, MatX<double>(0, 2), act, &cache);
    VecX<double> grad = VecX<double>::Zero(q.param_count());
    MatX<double> dact;
    q.backward(q.params, cache, MatX<double>::Ones(1, 2), grad, nullptr, &dact);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < act.size(); ++i) {
      const double orig = act.data()[i];
      act.data()[i] = orig + h;
      const double lp = loss(act);
      act.data()[i] = orig - h;
      const double lm = loss(act);
      act.data()[i] = orig;
      const double fd = (lp - lm) / (2 * h);
      CHECK(std::abs(fd - dact.data()[i]) / std::max(1e-6, std::abs(fd) + std::abs(dact.data()[i])) <
            1e-4);
    }
  }
  SUBCASE("parameter gradient matches finite differences") {
    QCritic<double> q(cfg, rng);
    const MatX<double> low = MatX<double>::Random(5, 3);
    const MatX<double> act = MatX<double>::Random(3, 3) * 0.04;
    auto loss = [&](const VecX<double>& p) {
      return q.forward(p, low, MatX<double>(0, 3), act, nullptr).squaredNorm();
    };
    QCritic<double>::Cache cache;
    const MatX<double> out = q.forward(q.params, low, MatX<double>(0, 3), act, &cache);
    VecX<double> grad = VecX<double>::Zero(q.param_count());
    q.backward(q.params, cache, 2.0 * out, grad);
    const auto res = testing::gradcheck(q.params, loss, grad, 1e-6, 300);
    CHECK(res.max_rel_error < 1e-4);
  }
}

TEST_CASE("actor parameter gradient through sampled action") {
  Rng rng(6);
  ActorConfig cfg;
  cfg.lowdim_in = 4;
  cfg.n_actions = 2;
  cfg.joint_embed = 6;
  cfg.hidden = 6;
  cfg.action_bound = 0.05;
  GaussianActor<double> actor(cfg, rng);
  const MatX<double> low = MatX<double>::Random(4, 3);
  const MatX<double> eps = MatX<double>::Random(2, 3);

  // loss = mean over batch of (sum a^2 + 0.1 * logprob), eps fixed
  auto loss = [&](const VecX<double>& p) {
    const auto d = actor.forward(p, low, MatX<double>(0, 3), nullptr);
    const MatX<double> pre = d.mu + (d.logstd.array().exp() * eps.array()).matrix();
    const MatX<double> a = 0.05 * pre.array().tanh().matrix();
    const VecX<double> lp = logprob_of_pre(d, pre, 0.05);
    return (a.colwise().squaredNorm().sum() + 0.1 * lp.sum()) / 3.0;
  };

  GaussianActor<double>::Cache cache;
  const auto d = actor.forward(actor.params, low, MatX<double>(0, 3), &cache);
  SampledAction<double> s;
  s.eps = eps;
  s.pre = d.mu + (d.logstd.array().exp() * eps.array()).matrix();
  s.action = 0.05 * s.pre.array().tanh().matrix();
  const MatX<double> dL_da = 2.0 * s.action / 3.0;
  const VecX<double> w_lp = VecX<double>::Constant(3, 0.1 / 3.0);
  const auto sg = squashed_backward(d, s, dL_da, w_lp, 0.05);
  VecX<double> grad = VecX<double>::Zero(actor.param_count());
  actor.backward(actor.params, cache, sg.dmu, sg.dlogstd, grad);
  const auto res = testing::gradcheck(actor.params, loss, grad, 1e-6, 300);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("polyak update") {
  SUBCASE("tau = 1 copies") {
    VecX<double> target = VecX<double>::Random(10);
    const VecX<double> online = VecX<double>::Random(10);
    polyak_update(target, online, 1.0);
    CHECK((target - online).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("scalar arithmetic") {
    VecX<double> target = VecX<double>::Zero(1);
    const VecX<double> online = VecX<double>::Ones(1);
    polyak_update(target, online, 0.005);
    CHECK(target[0] == doctest::Approx(0.005));
  }
  SUBCASE("geometric convergence") {
    VecX<double> target = VecX<double>::Zero(1);
    const VecX<double> online = VecX<double>::Ones(1);
    const double tau = 0.02;
    const int halving = static_cast<int>(std::round(std::log(2.0) / tau));
    double prev_err = 1.0;
    for (int k = 0; k < 5; ++k) {
      for (int i = 0; i < halving; ++i) polyak_update(target, online, tau);
      const double err = std::abs(1.0 - target[0]);
      CHECK(err / prev_err == doctest::Approx(0.5).epsilon(0.05));
      prev_err = err;
    }
  }
  SUBCASE("structure mismatch throws") {
    VecX<double> target = VecX<double>::Zero(3);
    const VecX<double> online = VecX<double>::Ones(4);
    CHECK_THROWS_AS(polyak_update(target, online, 0.5), std::invalid_argument);
  }
}

TEST_CASE("golden parameter counts for the default configs") {
  Rng rng(7);
  // stage-1 nets: 4 joints + 3 goal coordinates, no vision
  ActorConfig a1;
  a1.lowdim_in = 7;
  a1.n_actions = 4;
  CHECK(GaussianActor<double>(a1, rng).param_count() == 85000);
  CriticConfig c1;
  c1.lowdim_in = 7;
  c1.n_actions = 4;
  CHECK(QCritic<double>(c1, rng).param_count() == 84225);

  // stage-2 encoder at 48x48, 3 views
  EncoderConfig e;
  CHECK(MultiViewEncoder<double>(e, rng).param_count() == 142704);
  CHECK(MultiViewEncoder<double>(e, rng).view_feat_dim() == 288);

  ActorConfig a2 = a1;
  a2.vis_dim = 64;
  CHECK(GaussianActor<double>(a2, rng).param_count() == 101384);
  CriticConfig c2 = c1;
  c2.vis_dim = 64;
  CHECK(QCritic<double>(c2, rng).param_count() == 100609);
}

TEST_CASE("adam reduces a quadratic") {
  Rng rng(8);
  VecX<double> x = VecX<double>::Constant(4, 2.0);
  Adam<double> opt(0.05);
  for (int i = 0; i < 500; ++i) {
    const VecX<double> grad = 2.0 * x;
    opt.step(x, grad);
  }
  CHECK(x.cwiseAbs().maxCoeff() < 1e-2);
}
