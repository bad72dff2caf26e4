#include "ossr/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <type_traits>

#include "ossr/error.hpp"

namespace ossr {

template <class S>
GraphEdges knn_graph(const Matrix<S>& x, int k) {
  const int n = static_cast<int>(x.rows());
  if (k < 1 || k > n) throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " for n=" + std::to_string(n));
  GraphEdges g;
  g.n = n;
  g.k = k;
  g.idx.resize(static_cast<std::size_t>(n) * k);
  // |xi - xj|^2 = |xi|^2 + |xj|^2 - 2 xi.xj; the |xi|^2 term is constant per
  // row. Gram rows are formed in blocks that stay in cache.
  using RowMajor = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Vector<S> sq = x.rowwise().squaredNorm();
  const int m = k - 1;
  constexpr int kBlock = 64;
  RowMajor block(std::min(kBlock, n), n);
  std::vector<S> best_d(static_cast<std::size_t>(std::max(m, 1)));
  std::vector<int> best_j(best_d.size());
  for (int r0 = 0; r0 < n; r0 += kBlock) {
    const int rows = std::min(kBlock, n - r0);
    block.topRows(rows).noalias() = x.middleRows(r0, rows) * x.transpose();
    for (int r = 0; r < rows; ++r) {
      const int i = r0 + r;
      S* d = block.row(r).data();
      for (int j = 0; j < n; ++j) d[j] = sq(j) - 2 * d[j];
      d[i] = std::numeric_limits<S>::infinity();
      // Ascending j with strict comparisons keeps the lower index first on ties.
      int filled = 0;
      S thr = std::numeric_limits<S>::infinity();
      auto insert = [&](int j) {
        const S v = d[j];
        if (!(v < thr)) return;
        int pos = filled < m ? filled++ : m - 1;
        while (pos > 0 && v < best_d[static_cast<std::size_t>(pos - 1)]) {
          best_d[static_cast<std::size_t>(pos)] = best_d[static_cast<std::size_t>(pos - 1)];
          best_j[static_cast<std::size_t>(pos)] = best_j[static_cast<std::size_t>(pos - 1)];
          --pos;
        }
        best_d[static_cast<std::size_t>(pos)] = v;
        best_j[static_cast<std::size_t>(pos)] = j;
        if (filled == m) thr = best_d[static_cast<std::size_t>(m - 1)];
      };
      for (int j = 0; j < n && m > 0; ++j) insert(j);
      int* row = g.idx.data() + static_cast<std::size_t>(i) * k;
      row[0] = i;
      for (int q = 0; q < m; ++q) row[q + 1] = best_j[static_cast<std::size_t>(q)];
    }
  }
  return g;
}

template <class S>
Matrix<S> edge_conv(const Matrix<S>& x, const GraphEdges& graph, const EdgeConvLayer<S>& layer,
                    EdgeConvCache<S>* cache) {
  const int n = static_cast<int>(x.rows());
  if (layer.theta.cols() != x.cols() || layer.phi.rows() != layer.theta.rows() ||
      layer.phi.cols() != layer.theta.cols() || layer.bias.size() != layer.theta.rows() || graph.n != n)
    throw Error(ErrorCode::ShapeMismatch, "edge_conv operand shapes disagree");
  const int out = static_cast<int>(layer.theta.rows());
  // theta (xj - xi) + phi xi + b = A_j + B_i
  using RowMajor = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor a = x * layer.theta.transpose();
  const RowMajor b = (x * (layer.phi - layer.theta).transpose()).rowwise() + layer.bias.transpose();
  Matrix<S> pre(n, out);
  Eigen::MatrixXi arg(n, out);
  std::vector<S> best(static_cast<std::size_t>(out));
  std::vector<S> win(static_cast<std::size_t>(out));  // vertex ids held as S so the scan vectorizes
  for (int i = 0; i < n; ++i) {
    const int* nb = graph.row(i);
    std::copy_n(a.row(nb[0]).data(), out, best.begin());
    for (int q = 1; q < graph.k; ++q) {
      const S* aj = a.row(nb[q]).data();
      for (int c = 0; c < out; ++c) best[c] = std::max(best[c], aj[c]);
    }
    const S* bi = b.row(i).data();
    for (int c = 0; c < out; ++c) pre(i, c) = best[c] + bi[c];
    if (!cache) continue;
    // second pass: lowest vertex id attaining the maximum
    std::fill(win.begin(), win.end(), static_cast<S>(n));
    for (int q = 0; q < graph.k; ++q) {
      const S j = static_cast<S>(nb[q]);
      const S* aj = a.row(nb[q]).data();
      for (int c = 0; c < out; ++c) win[c] = (aj[c] == best[c] && j < win[c]) ? j : win[c];
    }
    for (int c = 0; c < out; ++c) arg(i, c) = static_cast<int>(win[c]);
  }
  Matrix<S> y = pre.cwiseMax(S(0));
  if (cache) {
    cache->input = x;
    cache->graph = graph;
    cache->pre = std::move(pre);
    cache->argmax = std::move(arg);
    cache->output = y;
  }
  return y;
}

template <class S>
ModelState<S> ModelState<S>::initialize(const NetConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto randn = [&](int r, int c, double stddev) {
    Matrix<S> m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = static_cast<S>(normal(rng) * stddev);
    return m;
  };
  ModelState st;
  st.config = cfg;
  int fin = cfg.in_dim;
  for (int l = 0; l < 3; ++l) {
    const int fout = cfg.widths[static_cast<std::size_t>(l)];
    st.layers[static_cast<std::size_t>(l)].theta = randn(fout, fin, std::sqrt(1.0 / fin));
    st.layers[static_cast<std::size_t>(l)].phi = randn(fout, fin, std::sqrt(1.0 / fin));
    st.layers[static_cast<std::size_t>(l)].bias = Vector<S>::Zero(fout);
    fin = fout;
  }
  st.w1 = randn(cfg.hidden, cfg.pooled_dim(), std::sqrt(2.0 / cfg.pooled_dim()));
  st.b1 = Vector<S>::Zero(cfg.hidden);
  st.w2 = randn(cfg.embed, cfg.hidden, std::sqrt(1.0 / cfg.hidden));
  st.b2 = Vector<S>::Zero(cfg.embed);
  st.arc = randn(cfg.embed, cfg.classes, 1.0);
  st.normalize_arc();
  return st;
}

template <class S>
ModelState<S> ModelState<S>::zeros_like(const ModelState& other) {
  ModelState z = other;
  z.visit([](auto& m) { m.setZero(); });
  return z;
}

template <class S>
std::size_t ModelState<S>::parameter_count() const {
  std::size_t n = 0;
  visit([&](const auto& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

template <class S>
void ModelState<S>::normalize_arc() {
  for (Eigen::Index j = 0; j < arc.cols(); ++j) {
    const S nrm = arc.col(j).norm();
    if (nrm > 0) arc.col(j) /= nrm;
  }
}

template <class S>
template <class T>
ModelState<T> ModelState<S>::cast() const {
  ModelState<T> out;
  out.config = config;
  for (std::size_t l = 0; l < 3; ++l) {
    out.layers[l].theta = layers[l].theta.template cast<T>();
    out.layers[l].phi = layers[l].phi.template cast<T>();
    out.layers[l].bias = layers[l].bias.template cast<T>();
  }
  out.w1 = w1.template cast<T>();
  out.b1 = b1.template cast<T>();
  out.w2 = w2.template cast<T>();
  out.b2 = b2.template cast<T>();
  out.arc = arc.template cast<T>();
  return out;
}

template <class S>
Vector<S> forward(const Matrix<S>& input, const ModelState<S>& model, ForwardCache<S>* cache) {
  const auto& cfg = model.config;
  if (input.cols() != cfg.in_dim) throw Error(ErrorCode::ShapeMismatch, "input feature width");
  const int n = static_cast<int>(input.rows());
  Vector<S> pooled(cfg.pooled_dim());
  std::vector<int> pool_arg(static_cast<std::size_t>(cfg.pooled_dim()));
  Matrix<S> x = input;
  int offset = 0;
  for (std::size_t l = 0; l < 3; ++l) {
    const GraphEdges graph = knn_graph<S>(x, std::min(cfg.k, n));
    Matrix<S> y = edge_conv<S>(x, graph, model.layers[l], cache ? &cache->layers[l] : nullptr);
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      Eigen::Index r = 0;
      pooled(offset + c) = y.col(c).maxCoeff(&r);  // first maximum: lowest row on ties
      pool_arg[static_cast<std::size_t>(offset + c)] = static_cast<int>(r);
    }
    offset += static_cast<int>(y.cols());
    x = std::move(y);
  }
  Vector<S> pre1 = model.w1 * pooled + model.b1;
  Vector<S> raw = model.w2 * pre1.cwiseMax(S(0)) + model.b2;
  const S nrm = raw.norm();
  Vector<S> e = nrm > 0 ? Vector<S>(raw / nrm) : Vector<S>::Zero(raw.size());
  if (cache) {
    cache->pooled = pooled;
    cache->pool_arg = std::move(pool_arg);
    cache->pre1 = std::move(pre1);
    cache->raw = std::move(raw);
    cache->raw_norm = nrm;
    cache->embedding = e;
  }
  return e;
}

template <class S>
void backward(const ForwardCache<S>& cache, const ModelState<S>& model, const Vector<S>& de, ModelState<S>& g) {
  if (cache.raw_norm <= 0) return;
  const Vector<S>& e = cache.embedding;
  const Vector<S> draw = (de - e * e.dot(de)) / cache.raw_norm;
  const Vector<S> h1 = cache.pre1.cwiseMax(S(0));
  g.w2.noalias() += draw * h1.transpose();
  g.b2 += draw;
  Vector<S> dpre1 = model.w2.transpose() * draw;
  for (Eigen::Index i = 0; i < dpre1.size(); ++i)
    if (!(cache.pre1(i) > 0)) dpre1(i) = 0;
  g.w1.noalias() += dpre1 * cache.pooled.transpose();
  g.b1 += dpre1;
  const Vector<S> dpooled = model.w1.transpose() * dpre1;

  Matrix<S> dy;  // gradient w.r.t. the current layer's output
  int offset = model.config.pooled_dim();
  for (int l = 2; l >= 0; --l) {
    const auto& lc = cache.layers[static_cast<std::size_t>(l)];
    const auto& layer = model.layers[static_cast<std::size_t>(l)];
    auto& gl = g.layers[static_cast<std::size_t>(l)];
    const int n = static_cast<int>(lc.output.rows()), out = static_cast<int>(lc.output.cols());
    offset -= out;
    if (dy.size() == 0) dy = Matrix<S>::Zero(n, out);
    for (int c = 0; c < out; ++c) dy(cache.pool_arg[static_cast<std::size_t>(offset + c)], c) += dpooled(offset + c);

    Matrix<S> db = Matrix<S>::Zero(n, out), da = Matrix<S>::Zero(n, out);
    for (int c = 0; c < out; ++c)
      for (int i = 0; i < n; ++i) {
        if (!(lc.pre(i, c) > 0)) continue;
        const S v = dy(i, c);
        if (v == 0) continue;
        db(i, c) = v;
        da(lc.argmax(i, c), c) += v;
      }
    gl.theta.noalias() += (da - db).transpose() * lc.input;
    gl.phi.noalias() += db.transpose() * lc.input;
    gl.bias += db.colwise().sum().transpose();
    if (l > 0) dy = da * layer.theta + db * (layer.phi - layer.theta);
  }
}

template <class S>
std::vector<int> activation_signature(const ForwardCache<S>& cache) {
  std::vector<int> sig;
  for (const auto& lc : cache.layers) {
    sig.insert(sig.end(), lc.graph.idx.begin(), lc.graph.idx.end());
    for (Eigen::Index c = 0; c < lc.argmax.cols(); ++c)
      for (Eigen::Index i = 0; i < lc.argmax.rows(); ++i) {
        sig.push_back(lc.argmax(i, c));
        sig.push_back(lc.pre(i, c) > 0 ? 1 : 0);
      }
  }
  sig.insert(sig.end(), cache.pool_arg.begin(), cache.pool_arg.end());
  for (Eigen::Index i = 0; i < cache.pre1.size(); ++i) sig.push_back(cache.pre1(i) > 0 ? 1 : 0);
  return sig;
}

template <class S>
ArcfaceResult<S> arcface_loss(const Matrix<S>& emb, const std::vector<int>& labels, const Matrix<S>& w, double s,
                              double margin) {
  if (!(margin >= 0 && margin < std::numbers::pi / 2))
    throw Error(ErrorCode::InvalidMargin, "margin must lie in [0, pi/2)");
  const Eigen::Index n = emb.rows(), c = w.cols();
  if (n < 1 || static_cast<Eigen::Index>(labels.size()) != n || emb.cols() != w.rows())
    throw Error(ErrorCode::ShapeMismatch, "arcface operand shapes disagree");
  // Softmax arithmetic runs in at least double precision.
  using W = std::conditional_t<(sizeof(S) > sizeof(double)), S, double>;
  const W lo = W(-1) + W(1e-7), hi = W(1) - W(1e-7);
  const W sw = static_cast<W>(s), mw = static_cast<W>(margin);
  const Matrix<S> cosine = emb * w;
  Matrix<S> dcos(n, c);
  ArcfaceResult<S> res;
  res.clamped.assign(static_cast<std::size_t>(n * c), 0);
  W total = 0;
  std::vector<W> logit(static_cast<std::size_t>(c)), dlogit_dcos(static_cast<std::size_t>(c));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw Error(ErrorCode::ShapeMismatch, "label out of range");
    for (Eigen::Index j = 0; j < c; ++j) {
      W v = static_cast<W>(cosine(i, j));
      const bool clamped = v < lo || v > hi;
      res.clamped[static_cast<std::size_t>(i * c + j)] = clamped ? 1 : 0;
      v = std::clamp(v, lo, hi);
      if (j == y && std::acos(v) + mw > std::numbers::pi_v<W>) {
        // cos(theta + m) turns back up past pi, which rewards pushing the
        // embedding away from its own class. Continue monotonically instead.
        res.clamped[static_cast<std::size_t>(i * c + j)] |= 2;
        logit[static_cast<std::size_t>(j)] = sw * (v - mw * std::sin(mw));
        dlogit_dcos[static_cast<std::size_t>(j)] = clamped ? W(0) : sw;
      } else if (j == y) {
        const W theta = std::acos(v);
        logit[static_cast<std::size_t>(j)] = sw * std::cos(theta + mw);
        dlogit_dcos[static_cast<std::size_t>(j)] = clamped ? W(0) : sw * std::sin(theta + mw) / std::sin(theta);
      } else {
        logit[static_cast<std::size_t>(j)] = sw * v;
        dlogit_dcos[static_cast<std::size_t>(j)] = clamped ? W(0) : sw;
      }
    }
    const W mx = *std::max_element(logit.begin(), logit.end());
    W z = 0;
    for (W l : logit) z += std::exp(l - mx);
    const W lse = mx + std::log(z);
    total += lse - logit[static_cast<std::size_t>(y)];
    for (Eigen::Index j = 0; j < c; ++j) {
      const W p = std::exp(logit[static_cast<std::size_t>(j)] - lse);
      const W dl = (p - (j == y ? W(1) : W(0))) / static_cast<W>(n);
      dcos(i, j) = static_cast<S>(dl * dlogit_dcos[static_cast<std::size_t>(j)]);
    }
  }
  res.loss = static_cast<S>(total / static_cast<W>(n));
  res.d_embeddings = dcos * w.transpose();
  res.d_weights = emb.transpose() * dcos;
  return res;
}

#define OSSR_INSTANTIATE(S)                                                                                    \
  template GraphEdges knn_graph<S>(const Matrix<S>&, int);                                                    \
  template Matrix<S> edge_conv<S>(const Matrix<S>&, const GraphEdges&, const EdgeConvLayer<S>&,               \
                                  EdgeConvCache<S>*);                                                          \
  template struct ModelState<S>;                                                                               \
  template Vector<S> forward<S>(const Matrix<S>&, const ModelState<S>&, ForwardCache<S>*);                     \
  template void backward<S>(const ForwardCache<S>&, const ModelState<S>&, const Vector<S>&, ModelState<S>&);   \
  template std::vector<int> activation_signature<S>(const ForwardCache<S>&);                                   \
  template ArcfaceResult<S> arcface_loss<S>(const Matrix<S>&, const std::vector<int>&, const Matrix<S>&, double, \
                                            double);

OSSR_INSTANTIATE(float)
OSSR_INSTANTIATE(double)
OSSR_INSTANTIATE(long double)  // extended-precision reference for gradient checks
#undef OSSR_INSTANTIATE

template ModelState<double> ModelState<float>::cast<double>() const;
template ModelState<float> ModelState<double>::cast<float>() const;
template ModelState<float> ModelState<float>::cast<float>() const;
template ModelState<double> ModelState<double>::cast<double>() const;
template ModelState<long double> ModelState<double>::cast<long double>() const;

}  // namespace ossr
