#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gradcheck.hpp"
#include "ossr/error.hpp"
#include "ossr/net.hpp"

using namespace ossr;

namespace {

Matrix<double> normal_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

std::vector<std::vector<int>> brute_knn(const Matrix<double>& x, int k) {
  const int n = static_cast<int>(x.rows());
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> d;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0;
      for (int c = 0; c < x.cols(); ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      d.push_back({s, j});
    }
    std::sort(d.begin(), d.end());
    out[static_cast<std::size_t>(i)].push_back(i);
    for (int t = 0; t < k - 1; ++t) out[static_cast<std::size_t>(i)].push_back(d[static_cast<std::size_t>(t)].second);
  }
  return out;
}

Matrix<double> loop_edge_conv(const Matrix<double>& x, const std::vector<std::vector<int>>& nb,
                              const EdgeConvLayer<double>& l) {
  const Eigen::Index n = x.rows(), fin = x.cols(), fout = l.theta.rows();
  Matrix<double> y(n, fout);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index o = 0; o < fout; ++o) {
      double best = -1e300;
      for (int j : nb[static_cast<std::size_t>(i)]) {
        double v = l.bias(o);
        for (Eigen::Index c = 0; c < fin; ++c) v += l.theta(o, c) * (x(j, c) - x(i, c)) + l.phi(o, c) * x(i, c);
        best = std::max(best, std::max(v, 0.0));
      }
      y(i, o) = best;
    }
  return y;
}

std::vector<double> oracle_forward(const Matrix<double>& input, const ModelState<double>& m) {
  Matrix<double> x = input;
  std::vector<double> pooled;
  for (const auto& layer : m.layers) {
    x = loop_edge_conv(x, brute_knn(x, m.config.k), layer);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      double best = -1e300;
      for (Eigen::Index r = 0; r < x.rows(); ++r) best = std::max(best, x(r, c));
      pooled.push_back(best);
    }
  }
  std::vector<double> hidden(static_cast<std::size_t>(m.w1.rows()));
  for (Eigen::Index r = 0; r < m.w1.rows(); ++r) {
    double v = m.b1(r);
    for (Eigen::Index c = 0; c < m.w1.cols(); ++c) v += m.w1(r, c) * pooled[static_cast<std::size_t>(c)];
    hidden[static_cast<std::size_t>(r)] = std::max(v, 0.0);
  }
  std::vector<double> e(static_cast<std::size_t>(m.w2.rows()));
  double norm = 0;
  for (Eigen::Index r = 0; r < m.w2.rows(); ++r) {
    double v = m.b2(r);
    for (Eigen::Index c = 0; c < m.w2.cols(); ++c) v += m.w2(r, c) * hidden[static_cast<std::size_t>(c)];
    e[static_cast<std::size_t>(r)] = v;
    norm += v * v;
  }
  for (double& v : e) v /= std::sqrt(norm);
  return e;
}

double direct_cross_entropy(const Matrix<double>& e, const std::vector<int>& y, const Matrix<double>& w, double s) {
  double total = 0;
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    double z = 0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) z += std::exp(s * e.row(i).dot(w.col(j)));
    total += std::log(z) - s * e.row(i).dot(w.col(y[static_cast<std::size_t>(i)]));
  }
  return total / static_cast<double>(e.rows());
}

Matrix<double> unit_rows(Matrix<double> m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i).normalize();
  return m;
}

}  // namespace

TEST_CASE("knn_graph") {
  const Matrix<double> x = normal_matrix(12, 3, 1);
  const GraphEdges self = knn_graph<double>(x, 1);
  for (int i = 0; i < 12; ++i) CHECK(self.row(i)[0] == i);

  Matrix<double> sq(4, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1;
  const GraphEdges g = knn_graph<double>(sq, 3);
  for (int i = 0; i < 4; ++i) {
    CHECK(g.row(i)[0] == i);
    std::vector<int> others{g.row(i)[1], g.row(i)[2]};
    std::sort(others.begin(), others.end());
    std::vector<int> adjacent{(i + 1) % 4, (i + 3) % 4};
    std::sort(adjacent.begin(), adjacent.end());
    CHECK(others == adjacent);
  }

  Matrix<double> dup(5, 2);
  dup << 0, 0, 3, 3, 0, 0, 0, 0, 9, 9;
  const GraphEdges d = knn_graph<double>(dup, 3);
  CHECK(std::vector<int>(d.row(0), d.row(0) + 3) == std::vector<int>{0, 2, 3});
  CHECK(std::vector<int>(d.row(3), d.row(3) + 3) == std::vector<int>{3, 0, 2});

  CHECK_THROWS_AS(knn_graph<double>(x, 13), Error);
  CHECK_THROWS_AS(knn_graph<double>(x, 0), Error);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix<double> r = normal_matrix(60, 5, 100 + seed);
    const GraphEdges kg = knn_graph<double>(r, 7);
    const auto oracle = brute_knn(r, 7);
    for (int i = 0; i < 60; ++i) CHECK(std::vector<int>(kg.row(i), kg.row(i) + 7) == oracle[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("edge_conv") {
  const Matrix<double> x = normal_matrix(3, 2, 4);
  EdgeConvLayer<double> zero{Matrix<double>::Zero(4, 2), Matrix<double>::Zero(4, 2), Vector<double>::Zero(4)};
  CHECK(edge_conv<double>(x, knn_graph<double>(x, 3), zero).isZero(0));

  EdgeConvLayer<double> l{normal_matrix(4, 2, 5), normal_matrix(4, 2, 6), normal_matrix(4, 1, 7)};
  const Matrix<double> collapsed = edge_conv<double>(x, knn_graph<double>(x, 1), l);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index o = 0; o < 4; ++o) {
      const double v = std::max(0.0, l.phi.row(o).dot(x.row(i)) + l.bias(o));
      CHECK(collapsed(i, o) == doctest::Approx(v).epsilon(1e-15));
    }

  for (int k = 1; k <= 3; ++k) {
    const Matrix<double> y = edge_conv<double>(x, knn_graph<double>(x, k), l);
    const Matrix<double> o = loop_edge_conv(x, brute_knn(x, k), l);
    CHECK((y - o).cwiseAbs().maxCoeff() < 1e-12);
  }

  EdgeConvLayer<double> bad{normal_matrix(4, 3, 8), normal_matrix(4, 3, 9), Vector<double>::Zero(4)};
  CHECK_THROWS_AS(edge_conv<double>(x, knn_graph<double>(x, 2), bad), Error);
}

TEST_CASE("forward is a permutation-invariant unit embedding") {
  const ModelState<double> model = ModelState<double>::initialize(NetConfig{}, 3);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix<double> x = normal_matrix(1024, 9, 50 + static_cast<std::uint64_t>(trial));
    const Vector<double> e = forward(x, model);
    CHECK(std::abs(e.norm() - 1) < 1e-6);
    std::vector<int> perm(1024);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix<double> px(1024, 9);
    for (int i = 0; i < 1024; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    CHECK((forward(px, model) - e).cwiseAbs().maxCoeff() < 1e-5);
  }
  CHECK_THROWS_AS(forward(normal_matrix(50, 8, 1), model), Error);
}

TEST_CASE("forward matches a loop-based oracle") {
  const ModelState<double> model = ModelState<double>::initialize(NetConfig{}, 11);
  const Matrix<double> x = normal_matrix(1024, 9, 12);
  const Vector<double> e = forward(x, model);
  const std::vector<double> o = oracle_forward(x, model);
  REQUIRE(static_cast<std::size_t>(e.size()) == o.size());
  for (std::size_t i = 0; i < o.size(); ++i) CHECK(std::abs(e(static_cast<Eigen::Index>(i)) - o[i]) < 1e-9);
}

TEST_CASE("graphs are rebuilt from each layer's features") {
  NetConfig cfg;
  cfg.k = 6;
  const ModelState<double> model = ModelState<double>::initialize(cfg, 2);
  const Matrix<double> x = normal_matrix(200, 9, 21);
  ForwardCache<double> c;
  forward(x, model, &c);
  CHECK(c.layers[0].graph == knn_graph<double>(x, 6));
  CHECK(c.layers[1].graph == knn_graph<double>(c.layers[0].output, 6));
  CHECK(c.layers[2].graph == knn_graph<double>(c.layers[1].output, 6));
  CHECK_FALSE(c.layers[1].graph == c.layers[0].graph);
}

TEST_CASE("arcface with zero margin is softmax cross-entropy") {
  const Matrix<double> e = unit_rows(normal_matrix(6, 8, 30));
  const Matrix<double> w = unit_rows(normal_matrix(5, 8, 31)).transpose();
  const std::vector<int> y{0, 1, 2, 3, 4, 2};
  for (double s : {1.0, 30.0, 64.0}) {
    const auto r = arcface_loss<double>(e, y, w, s, 0.0);
    CHECK(std::abs(r.loss - direct_cross_entropy(e, y, w, s)) < 1e-9);
  }
  const Matrix<double> w1 = unit_rows(normal_matrix(1, 8, 32)).transpose();
  CHECK(arcface_loss<double>(e, std::vector<int>(6, 0), w1, 30.0, 0.5).loss == doctest::Approx(0.0));
  CHECK_THROWS_AS(arcface_loss<double>(e, y, w, 30.0, -0.1), Error);
  CHECK_THROWS_AS(arcface_loss<double>(e, y, w, 30.0, std::numbers::pi / 2), Error);
  CHECK_THROWS_AS(arcface_loss<double>(e, {0, 1}, w, 30.0, 0.5), Error);
  CHECK_THROWS_AS(arcface_loss<double>(e, {0, 1, 2, 3, 4, 5}, w, 30.0, 0.5), Error);
}

TEST_CASE("arcface gradients match central differences") {
  const double h = 1e-5;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Matrix<double> e = unit_rows(normal_matrix(4, 8, 40 + seed));
    Matrix<double> w = unit_rows(normal_matrix(5, 8, 60 + seed)).transpose();
    const std::vector<int> y{0, 3, 1, 4};
    const auto r = arcface_loss<double>(e, y, w, 30.0, 0.5);
    double worst = 0;
    auto probe = [&](Matrix<double>& m, const Matrix<double>& analytic) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double v = m.data()[i];
        m.data()[i] = v + h;
        const double lp = arcface_loss<double>(e, y, w, 30.0, 0.5).loss;
        m.data()[i] = v - h;
        const double lm = arcface_loss<double>(e, y, w, 30.0, 0.5).loss;
        m.data()[i] = v;
        const double f = (lp - lm) / (2 * h), a = analytic.data()[i];
        worst = std::max(worst, std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-6}));
      }
    };
    probe(e, r.d_embeddings);
    probe(w, r.d_weights);
    CAPTURE(seed);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("full network gradient") {
  const auto g = testsupport::full_gradient_check(7);
  CHECK(g.checked > 400);
  CHECK(g.worst < 1e-4);
}

TEST_CASE("model state") {
  NetConfig cfg;
  cfg.classes = 7;
  const ModelState<double> m = ModelState<double>::initialize(cfg, 9);
  for (Eigen::Index j = 0; j < m.arc.cols(); ++j) CHECK(std::abs(m.arc.col(j).norm() - 1) < 1e-12);
  CHECK(m.layers[0].theta.rows() == 64);
  CHECK(m.layers[0].theta.cols() == 9);
  CHECK(m.layers[2].phi.rows() == 128);
  CHECK(m.w1.cols() == 256);
  CHECK(m.w2.rows() == 128);
  std::size_t count = 0;
  m.visit([&](const auto& b) { count += static_cast<std::size_t>(b.size()); });
  CHECK(count == m.parameter_count());
  CHECK(ModelState<double>::zeros_like(m).w1.isZero(0));

  const ModelState<float> f = m.cast<float>();
  CHECK(f.w1(3, 5) == static_cast<float>(m.w1(3, 5)));
  const ModelState<double> same = ModelState<double>::initialize(cfg, 9);
  CHECK(same.w2 == m.w2);
  CHECK_FALSE(ModelState<double>::initialize(cfg, 10).w2 == m.w2);

  ModelState<double> grown = m;
  grown.arc *= 3.0;
  grown.normalize_arc();
  CHECK((grown.arc - m.arc).cwiseAbs().maxCoeff() < 1e-12);
}
