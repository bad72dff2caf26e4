#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ossr {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct NetConfig {
  int k = 20;
  int in_dim = 9;
  std::array<int, 3> widths{64, 64, 128};
  int hidden = 256;
  int embed = 128;
  int classes = 2;
  double s = 30.0;       // arcface scale
  double margin = 0.5;   // arcface additive angular margin, radians

  int pooled_dim() const { return widths[0] + widths[1] + widths[2]; }
};

/// k neighbour ids per vertex, row-major; entry 0 is the vertex itself.
struct GraphEdges {
  int n = 0;
  int k = 0;
  std::vector<int> idx;

  const int* row(int i) const { return idx.data() + static_cast<std::size_t>(i) * k; }
  bool operator==(const GraphEdges&) const = default;
};

/// Self plus the k-1 nearest other rows by Euclidean distance; ties go to
/// the lower index.
template <class S>
GraphEdges knn_graph(const Matrix<S>& features, int k);

template <class S>
struct EdgeConvLayer {
  Matrix<S> theta;  // out x in
  Matrix<S> phi;    // out x in
  Vector<S> bias;   // out
};

template <class S>
struct EdgeConvCache {
  Matrix<S> input;
  GraphEdges graph;
  Matrix<S> pre;             // n x out, value before ReLU of the winning edge
  Eigen::MatrixXi argmax;    // n x out, winning neighbour vertex
  Matrix<S> output;
};

/// out_i = max_j ReLU(theta (x_j - x_i) + phi x_i + bias) over the graph row of i.
template <class S>
Matrix<S> edge_conv(const Matrix<S>& x, const GraphEdges& graph, const EdgeConvLayer<S>& layer,
                    EdgeConvCache<S>* cache = nullptr);

template <class S>
struct ModelState {
  NetConfig config;
  std::array<EdgeConvLayer<S>, 3> layers;
  Matrix<S> w1;  // hidden x pooled
  Vector<S> b1;
  Matrix<S> w2;  // embed x hidden
  Vector<S> b2;
  Matrix<S> arc;  // embed x classes, unit-norm columns

  static ModelState initialize(const NetConfig& config, std::uint64_t seed);
  static ModelState zeros_like(const ModelState& other);

  /// Visits every parameter block in serialization order:
  /// per layer theta, phi, bias; then w1, b1, w2, b2, arc.
  template <class Fn>
  void visit(Fn&& fn) {
    visit_impl(*this, fn);
  }
  template <class Fn>
  void visit(Fn&& fn) const {
    visit_impl(*this, fn);
  }

  std::size_t parameter_count() const;
  void normalize_arc();

  template <class T>
  ModelState<T> cast() const;

 private:
  template <class Self, class Fn>
  static void visit_impl(Self& self, Fn& fn) {
    for (auto& l : self.layers) {
      fn(l.theta);
      fn(l.phi);
      fn(l.bias);
    }
    fn(self.w1);
    fn(self.b1);
    fn(self.w2);
    fn(self.b2);
    fn(self.arc);
  }
};

template <class S>
struct ForwardCache {
  std::array<EdgeConvCache<S>, 3> layers;
  Vector<S> pooled;
  std::vector<int> pool_arg;  // winning row per pooled channel
  Vector<S> pre1;
  Vector<S> raw;
  S raw_norm = 0;
  Vector<S> embedding;
};

/// Dynamic-graph forward pass: the k-NN graph of every EdgeConv layer is
/// rebuilt from that layer's input. Returns the unit-norm embedding.
template <class S>
Vector<S> forward(const Matrix<S>& input, const ModelState<S>& model, ForwardCache<S>* cache = nullptr);

/// Accumulates parameter gradients of the network (not the arcface matrix)
/// into `grads` given dL/d(embedding).
template <class S>
void backward(const ForwardCache<S>& cache, const ModelState<S>& model, const Vector<S>& d_embedding,
              ModelState<S>& grads);

/// Discrete state of a forward pass (graphs, max winners, ReLU masks). Two
/// evaluations with equal signatures lie on the same smooth piece.
template <class S>
std::vector<int> activation_signature(const ForwardCache<S>& cache);

template <class S>
struct ArcfaceResult {
  S loss = 0;
  Matrix<S> d_embeddings;  // N x d
  Matrix<S> d_weights;     // d x C
  std::vector<int> clamped;  // bit 0: cosine hit the clamp; bit 1: target angle past pi - m
};

/// Mean additive-angular-margin softmax loss over the rows of `embeddings`.
template <class S>
ArcfaceResult<S> arcface_loss(const Matrix<S>& embeddings, const std::vector<int>& labels, const Matrix<S>& weights,
                              double s, double margin);

/// Per-class prototype embeddings used for retrieval.
struct ClassDirectory {
  struct Entry {
    std::string class_name;
    int orientation = 0;  // degrees
    Vector<float> embedding;
  };
  std::vector<std::string> classes;
  std::vector<Entry> entries;
};

}  // namespace ossr
