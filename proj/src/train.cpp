#include "ossr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "ossr/error.hpp"

namespace ossr {

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OSSR_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  // Static striping: every index lands on a fixed worker, results go to
  // caller-owned slots, so the outcome does not depend on scheduling.
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

GrayImage stage_prototype(const BinaryImage& glyph, const TrainConfig& cfg, BBox* glyph_box) {
  const int w = glyph.width + 2 * (cfg.stub + cfg.margin);
  const int h = glyph.height + 2 * cfg.margin;
  BinaryImage ink(w, h);
  const int gx = cfg.margin + cfg.stub, gy = cfg.margin;
  const int cy = gy + glyph.height / 2;
  for (int y = cy - cfg.stroke / 2; y < cy - cfg.stroke / 2 + cfg.stroke; ++y)
    for (int x = cfg.margin; x < w - cfg.margin; ++x) ink.set(x, y, true);
  BBox tight;
  for (int y = 0; y < glyph.height; ++y)
    for (int x = 0; x < glyph.width; ++x) {
      ink.set(gx + x, gy + y, glyph.at(x, y));
      if (glyph.at(x, y)) {
        tight.expand(Vec2{static_cast<double>(gx + x), static_cast<double>(gy + y)});
        tight.expand(Vec2{gx + x + 1.0, gy + y + 1.0});
      }
    }
  if (glyph_box) *glyph_box = tight;
  return to_gray(ink);
}

SymbolRegion prototype_region(const BinaryImage& glyph, const TrainConfig& cfg) {
  BBox box;
  const GrayImage staged = stage_prototype(glyph, cfg, &box);
  const VectorPathSet traced = trace(binarize(staged, cfg.front.window, cfg.front.offset), cfg.front.trace);
  SegmentParams sp = cfg.front.segment;
  sp.sampling.target_width = staged.width;  // keep the glyph at sheet scale
  const SegmentResult seg = segment(traced, sp);
  const SymbolRegion* best = nullptr;
  double best_overlap = 0;
  for (const auto& r : seg.regions) {
    const BBox ib = seg.image_bbox(r);
    const double ov = std::max(0.0, std::min(ib.x1, box.x1) - std::max(ib.x0, box.x0)) *
                      std::max(0.0, std::min(ib.y1, box.y1) - std::max(ib.y0, box.y0));
    if (ov > best_overlap) {
      best_overlap = ov;
      best = &r;
    }
  }
  if (best) return *best;
  SymbolRegion all;
  std::map<std::pair<int, int>, int> keys;
  for (const auto& p : seg.points) {
    auto [it, _] = keys.try_emplace({p.path_id, p.loop_id}, static_cast<int>(keys.size()));
    all.points.push_back(p.position);
    all.loop_keys.push_back(it->second);
    all.bbox.expand(p.position);
  }
  if (all.points.empty()) throw Error(ErrorCode::EmptyRegion, "prototype produced no points");
  return all;
}

Vector<float> embed_cloud(const PointCloud& cloud, const ModelState<float>& model) {
  const Matrix<float> x = featurize(cloud).values.cast<float>();
  return forward<float>(x, model);
}

TrainResult train(const GlyphSet& prototypes, const TrainConfig& cfg) {
  if (prototypes.size() < 2) throw Error(ErrorCode::InsufficientClasses, "training needs at least two classes");
  if (cfg.batch < 1 || cfg.epochs < 1 || cfg.augmentations < 1)
    throw Error(ErrorCode::InvalidConfig, "batch, epochs and augmentations must be positive");
  const int workers = worker_count(cfg.threads);
  NetConfig net = cfg.net;
  net.classes = static_cast<int>(prototypes.size());

  TrainResult res;
  std::vector<PointCloud> base;
  for (const auto& [name, glyph] : prototypes) {
    res.directory.classes.push_back(name);
    base.push_back(resample_region(prototype_region(glyph, cfg), cfg.points));
  }
  const int classes = net.classes;

  // Sample s = ((class * 4) + turn) * A + a; each gets its own seed.
  const int per_class = 4 * cfg.augmentations;
  const int total = classes * per_class;
  std::vector<Matrix<float>> data(static_cast<std::size_t>(total));
  std::vector<int> labels(static_cast<std::size_t>(total));
  std::mt19937_64 seeder(cfg.seed);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(total));
  for (auto& s : seeds) s = seeder();
  parallel_for(total, workers, [&](int s) {
    const int c = s / per_class, turn = (s % per_class) / cfg.augmentations;
    const PointCloud rotated = rotate_quarter(base[static_cast<std::size_t>(c)], turn);
    data[static_cast<std::size_t>(s)] =
        featurize(augment(rotated, cfg.augment, seeds[static_cast<std::size_t>(s)])).values.cast<float>();
    labels[static_cast<std::size_t>(s)] = c;
  });

  ModelState<float> model = ModelState<float>::initialize(net, seeder());
  ModelState<float> velocity = ModelState<float>::zeros_like(model);
  std::vector<int> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffler(seeder());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    double epoch_loss = 0;
    for (int start = 0; start < total; start += cfg.batch) {
      const int b = std::min(cfg.batch, total - start);
      std::vector<ForwardCache<float>> caches(static_cast<std::size_t>(b));
      Matrix<float> emb(b, net.embed);
      std::vector<int> y(static_cast<std::size_t>(b));
      parallel_for(b, workers, [&](int i) {
        const int s = order[static_cast<std::size_t>(start + i)];
        emb.row(i) = forward<float>(data[static_cast<std::size_t>(s)], model, &caches[static_cast<std::size_t>(i)]).transpose();
      });
      for (int i = 0; i < b; ++i) y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
      const auto loss = arcface_loss<float>(emb, y, model.arc, net.s, net.margin);
      if (!std::isfinite(loss.loss)) throw Error(ErrorCode::NonConvergence, "training loss is not finite");
      epoch_loss += static_cast<double>(loss.loss) * b;

      std::vector<ModelState<float>> per(static_cast<std::size_t>(b));
      parallel_for(b, workers, [&](int i) {
        auto& g = per[static_cast<std::size_t>(i)];
        g = ModelState<float>::zeros_like(model);
        backward<float>(caches[static_cast<std::size_t>(i)], model, loss.d_embeddings.row(i).transpose(), g);
      });
      ModelState<float> grad = std::move(per[0]);
      for (int i = 1; i < b; ++i) {  // fixed reduction order
        std::vector<Eigen::Map<Eigen::VectorXf>> acc;
        grad.visit([&](auto& m) { acc.emplace_back(m.data(), m.size()); });
        std::size_t k = 0;
        per[static_cast<std::size_t>(i)].visit([&](const auto& m) { acc[k++] += Eigen::Map<const Eigen::VectorXf>(m.data(), m.size()); });
      }
      grad.arc = loss.d_weights;

      std::vector<Eigen::Map<Eigen::VectorXf>> params, vel;
      model.visit([&](auto& m) { params.emplace_back(m.data(), m.size()); });
      velocity.visit([&](auto& m) { vel.emplace_back(m.data(), m.size()); });
      std::size_t k = 0;
      grad.visit([&](const auto& m) {
        vel[k] = static_cast<float>(cfg.momentum) * vel[k] + Eigen::Map<const Eigen::VectorXf>(m.data(), m.size());
        params[k] -= static_cast<float>(cfg.lr) * vel[k];
        ++k;
      });
      model.normalize_arc();
    }
    epoch_loss /= total;
    res.epoch_loss.push_back(epoch_loss);
    if (cfg.on_epoch) cfg.on_epoch(epoch, epoch_loss);
  }
  if (res.epoch_loss.back() > res.epoch_loss.front())
    throw Error(ErrorCode::NonConvergence, "final epoch loss exceeds the first");

  for (int c = 0; c < classes; ++c)
    for (int turn = 0; turn < 4; ++turn)
      res.directory.entries.push_back({res.directory.classes[static_cast<std::size_t>(c)], turn * 90,
                                       embed_cloud(rotate_quarter(base[static_cast<std::size_t>(c)], turn), model)});
  res.model = std::move(model);
  return res;
}

}  // namespace ossr
