#include <doctest.h>

#include <cmath>
#include <vector>

#include "fairad/error.hpp"
#include "fairad/finite_diff.hpp"
#include "fairad/objectives.hpp"
#include "fairad/sinkhorn.hpp"
#include "fairad/trainer.hpp"
#include "oracles.hpp"

using fairad::Matrix;
using namespace fairad;
using namespace fairad::model;

namespace {

DivergenceConfig tight_sinkhorn() {
  DivergenceConfig d;
  d.sinkhorn.tol = 1e-11;
  d.sinkhorn.max_iter = 100000;
  return d;
}

nn::MlpParams identity_net(std::size_t dim) {
  nn::MlpParams p;
  p.layers.push_back(nn::Layer{Matrix::identity(dim), std::vector<double>(dim, 0.0), nn::Activation::Identity});
  return p;
}

std::vector<double> joint(const nn::MlpParams& a, const nn::MlpParams& b) {
  auto v = nn::flatten(a);
  auto w = nn::flatten(b);
  v.insert(v.end(), w.begin(), w.end());
  return v;
}

void split_joint(std::span<const double> flat, nn::MlpParams& a, nn::MlpParams& b) {
  const std::size_t na = a.parameter_count();
  nn::assign_flat(a, flat.subspan(0, na));
  nn::assign_flat(b, flat.subspan(na));
}

// Share of coordinates whose analytic and numeric gradients agree.
double agreement(const std::vector<double>& an, const std::vector<double>& fd, double tol) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < an.size(); ++i) ok += oracle::rel_err(an[i], fd[i], 1e-6) <= tol ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(an.size());
}

Matrix shifted_gaussian(std::size_t n, std::size_t d, double shift, std::uint64_t seed) {
  Matrix m = oracle::random_matrix(n, d, seed);
  for (std::size_t i = 0; i < n; ++i) m(i, 0) += shift;
  return m;
}

}  // namespace

TEST_CASE("im loss: zero transport when groups already sit on their targets") {
  Matrix g0{{0, 0}, {3, 0}, {0, 3}}, g1{{3, 3}, {6, 0}, {-3, 0}};
  const std::vector<Matrix> groups{g0, g1};
  const std::vector<Matrix> targets{Matrix{{3, 0}, {0, 3}, {0, 0}}, Matrix{{-3, 0}, {3, 3}, {6, 0}}};
  auto r = im_fairad_loss(groups, targets, identity_net(2), identity_net(2), 0.0, tight_sinkhorn());
  REQUIRE(r.parts.group_transport_cost.size() == 2);
  for (double c : r.parts.group_transport_cost) CHECK(c <= 1e-6);
  CHECK(r.parts.reconstruction == 0.0);
}

TEST_CASE("im loss with one group is the plain sinkhorn value") {
  auto enc = nn::make_mlp(std::vector<std::size_t>{3, 5, 2}, 1);
  auto dec = nn::make_mlp(std::vector<std::size_t>{2, 5, 3}, 2);
  Matrix x = oracle::random_matrix(6, 3, 3), z = oracle::random_matrix(6, 2, 4);
  const std::vector<Matrix> groups{x}, targets{z};
  auto cfg = tight_sinkhorn();
  auto r = im_fairad_loss(groups, targets, enc, dec, 0.0, cfg);
  const double direct = ot::sinkhorn_distance(nn::mlp_apply(enc, x), z, cfg.sinkhorn).value;
  CHECK(r.loss == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("im loss: empty group is named") {
  auto enc = nn::make_mlp(std::vector<std::size_t>{3, 2}, 1);
  auto dec = nn::make_mlp(std::vector<std::size_t>{2, 3}, 2);
  const std::vector<Matrix> groups{Matrix(2, 3), Matrix(0, 3)}, targets{Matrix(2, 2), Matrix(2, 2)};
  try {
    im_fairad_loss(groups, targets, enc, dec, 1.0, {});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("group 1") != std::string::npos);
  }
}

TEST_CASE("im loss gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto enc = nn::make_mlp(std::vector<std::size_t>{3, 6, 2}, 10 + seed);
    auto dec = nn::make_mlp(std::vector<std::size_t>{2, 6, 3}, 20 + seed);
    const std::vector<Matrix> groups{oracle::random_matrix(4, 3, 30 + seed), shifted_gaussian(4, 3, 1.5, 40 + seed)};
    const std::vector<Matrix> targets{oracle::random_matrix(4, 2, 50 + seed), oracle::random_matrix(4, 2, 60 + seed)};
    auto cfg = tight_sinkhorn();
    auto r = im_fairad_loss(groups, targets, enc, dec, 0.7, cfg);
    auto e2 = enc, d2 = dec;
    auto fd = nn::finite_diff_grad(
        [&](std::span<const double> th) {
          split_joint(th, e2, d2);
          return im_fairad_loss(groups, targets, e2, d2, 0.7, cfg).loss;
        },
        joint(enc, dec), 1e-5);
    CHECK(agreement(joint(r.encoder_grad, r.decoder_grad), fd, 1e-3) >= 0.99);
  }
}

TEST_CASE("im loss gradients with the mmd divergence") {
  auto enc = nn::make_mlp(std::vector<std::size_t>{3, 4, 2}, 1, nn::Activation::Tanh);
  auto dec = nn::make_mlp(std::vector<std::size_t>{2, 4, 3}, 2, nn::Activation::Tanh);
  const std::vector<Matrix> groups{oracle::random_matrix(5, 3, 3), oracle::random_matrix(4, 3, 4)};
  const std::vector<Matrix> targets{oracle::random_matrix(5, 2, 5), oracle::random_matrix(4, 2, 6)};
  DivergenceConfig cfg;
  cfg.kind = DivergenceKind::Mmd;
  cfg.mmd_gamma = 0.5;
  auto r = im_fairad_loss(groups, targets, enc, dec, 1.0, cfg);
  auto e2 = enc, d2 = dec;
  auto fd = nn::finite_diff_grad(
      [&](std::span<const double> th) {
        split_joint(th, e2, d2);
        return im_fairad_loss(groups, targets, e2, d2, 1.0, cfg).loss;
      },
      joint(enc, dec), 1e-6);
  CHECK(agreement(joint(r.encoder_grad, r.decoder_grad), fd, 1e-4) == 1.0);
}

TEST_CASE("ex loss with lambda 0 is the fairness-unaware objective") {
  auto enc = nn::make_mlp(std::vector<std::size_t>{3, 5, 2}, 1);
  auto dec = nn::make_mlp(std::vector<std::size_t>{2, 5, 3}, 2);
  Matrix x = oracle::random_matrix(8, 3, 3), z = oracle::random_matrix(8, 2, 4);
  const std::vector<int> g{0, 1, 0, 1, 0, 1, 0, 1};
  auto cfg = tight_sinkhorn();
  auto r = ex_fairad_loss(x, g, z, enc, dec, 2.0, 0.0, cfg);
  CHECK(r.parts.fairness_term == 0.0);
  // Direct evaluation of Sinkhorn(h(X), Z) + beta/n |X - g(h(X))|^2.
  const Matrix e = nn::mlp_apply(enc, x);
  const Matrix rec = nn::mlp_apply(dec, e);
  double sq = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x.data()[i] - rec.data()[i]) * (x.data()[i] - rec.data()[i]);
  const double want = ot::sinkhorn_distance(e, z, cfg.sinkhorn).value + 2.0 / 8.0 * sq;
  CHECK(r.loss == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("ex loss: identical group embeddings have no score transport") {
  // Rows of group 1 repeat group 0, so both score multisets coincide.
  Matrix x{{0, 0}, {2, 0}, {0, 5}, {0, 0}, {2, 0}, {0, 5}};
  const std::vector<int> g{0, 0, 0, 1, 1, 1};
  auto r = ex_fairad_loss(x, g, oracle::random_matrix(6, 2, 1), identity_net(2), identity_net(2), 1.0, 1.0,
                          tight_sinkhorn());
  CHECK(r.parts.fairness_transport_cost <= 1e-6);
}

TEST_CASE("ex loss gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto enc = nn::make_mlp(std::vector<std::size_t>{3, 6, 2}, 100 + seed);
    auto dec = nn::make_mlp(std::vector<std::size_t>{2, 6, 3}, 200 + seed);
    Matrix x = vstack(std::vector<Matrix>{oracle::random_matrix(4, 3, 300 + seed), shifted_gaussian(4, 3, 2.0, 400 + seed)});
    const std::vector<int> g{0, 0, 0, 0, 1, 1, 1, 1};
    Matrix z = oracle::random_matrix(8, 2, 500 + seed);
    auto cfg = tight_sinkhorn();
    auto r = ex_fairad_loss(x, g, z, enc, dec, 0.5, 1.3, cfg);
    CHECK(r.parts.fairness_term != 0.0);
    auto e2 = enc, d2 = dec;
    auto fd = nn::finite_diff_grad(
        [&](std::span<const double> th) {
          split_joint(th, e2, d2);
          return ex_fairad_loss(x, g, z, e2, d2, 0.5, 1.3, cfg).loss;
        },
        joint(enc, dec), 1e-5);
    CHECK(agreement(joint(r.encoder_grad, r.decoder_grad), fd, 1e-3) >= 0.99);
  }
}

TEST_CASE("ex loss needs two groups") {
  auto enc = nn::make_mlp(std::vector<std::size_t>{2, 2}, 1);
  auto dec = nn::make_mlp(std::vector<std::size_t>{2, 2}, 2);
  const std::vector<int> one{0, 0, 0};
  CHECK_THROWS_AS(ex_fairad_loss(Matrix(3, 2), one, Matrix(3, 2), enc, dec, 1, 1, {}), DataError);
  const std::vector<int> gap{0, 2, 0};
  CHECK_THROWS_AS(ex_fairad_loss(Matrix(3, 2), gap, Matrix(3, 2), enc, dec, 1, 1, {}), DataError);
}

TEST_CASE("stratified batches cover every row once and contain every group") {
  std::vector<int> groups;
  for (int i = 0; i < 300; ++i) groups.push_back(i < 250 ? 0 : 1);
  Rng rng(5);
  auto batches = stratified_batches(groups, 64, 8, rng);
  std::vector<int> seen(groups.size(), 0);
  for (const auto& b : batches) {
    int c1 = 0;
    for (auto i : b) {
      ++seen[i];
      c1 += groups[i];
    }
    CHECK(c1 >= 8);
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(batches.size() == 5);
}

TEST_CASE("training with zero epochs returns the initialized model") {
  Matrix x = oracle::random_matrix(40, 4, 1);
  std::vector<int> g(40, 0);
  for (int i = 20; i < 40; ++i) g[i] = 1;
  TrainConfig cfg;
  cfg.epochs = 0;
  auto m = train(Variant::Im, x, g, cfg);
  CHECK(m.history.empty());
  CHECK(m.encoder == initialize_model(Variant::Im, 4, cfg).encoder);
}

TEST_CASE("training is deterministic and the total is the sum of its parts") {
  Matrix x = vstack(std::vector<Matrix>{oracle::random_matrix(60, 4, 1), shifted_gaussian(40, 4, 2.0, 2)});
  std::vector<int> g(100, 0);
  for (int i = 60; i < 100; ++i) g[i] = 1;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 32;
  cfg.seed = 3;
  for (auto v : {Variant::Im, Variant::Ex}) {
    auto a = train(v, x, g, cfg);
    auto b = train(v, x, g, cfg);
    CHECK(a.history == b.history);
    CHECK(a.encoder == b.encoder);
    REQUIRE(a.history.size() == 5);
    for (const auto& e : a.history) CHECK(e.total == e.sinkhorn_total + e.reconstruction + e.fairness_term);
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  Matrix x = oracle::random_matrix(30, 3, 4);
  std::vector<int> g(30, 0);
  for (int i = 15; i < 30; ++i) g[i] = 1;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 30;
  cfg.learning_rate = 0.0;
  auto m = train(Variant::Im, x, g, cfg);
  auto init = initialize_model(Variant::Im, 3, cfg);
  const auto a = nn::flatten(m.encoder), b = nn::flatten(init.encoder);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
}

TEST_CASE("training on shifted groups shrinks per-group transport cost") {
  Matrix x = vstack(std::vector<Matrix>{oracle::random_matrix(200, 4, 10), shifted_gaussian(200, 4, 2.0, 11)});
  std::vector<int> g(400, 0);
  for (int i = 200; i < 400; ++i) g[i] = 1;
  // One-dimensional embedding, full batches and a fixed target draw, so each
  // group always meets the same target points. With fresh draws the cost
  // between two finite target samples stays well above zero. A 1-d code
  // cannot reconstruct 4-d input, so beta is kept small.
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 1;
  cfg.target = make_target(1, 0);
  cfg.resample_target = false;
  cfg.divergence.sinkhorn.alpha = 0.01;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 400;
  cfg.beta = 0.1;
  auto m = train(Variant::Im, x, g, cfg);
  REQUIRE(m.history.size() == 200);
  for (std::size_t s = 0; s < 2; ++s) {
    INFO("group ", s, " initial ", m.history.front().group_transport_cost[s], " final ",
         m.history.back().group_transport_cost[s]);
    CHECK(m.history.back().group_transport_cost[s] < 0.1 * m.history.front().group_transport_cost[s]);
  }
}

TEST_CASE("scoring composes the encoder with the norm") {
  Matrix x = oracle::random_matrix(10, 3, 1);
  TrainedModel m;
  m.encoder = identity_net(3);
  auto s = score(m, x);
  for (std::size_t i = 0; i < 10; ++i) CHECK(s[i] == doctest::Approx(std::hypot(x(i, 0), x(i, 1), x(i, 2))).epsilon(1e-15));

  m.encoder.layers[0].weight = Matrix(3, 3);
  for (double v : score(m, x)) CHECK(v == 0.0);

  TrainConfig cfg;
  auto r = initialize_model(Variant::Im, 3, cfg);
  auto got = score_dataset(r, x, std::vector<int>(10, 0));
  auto emb = nn::mlp_apply(r.encoder, x);
  for (std::size_t i = 0; i < 10; ++i) {
    double ss = 0;
    for (double v : emb.row(i)) ss += v * v;
    CHECK(got.scores[i] == doctest::Approx(std::sqrt(ss)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(score(r, Matrix(2, 4)), ShapeError);
}
