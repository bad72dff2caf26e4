#include "ossr/recognizer.hpp"

#include <algorithm>
#include <map>

#include "ossr/error.hpp"

namespace ossr {

std::vector<Vector<float>> embed_region(const SymbolRegion& region, const ModelState<float>& model,
                                        const RecognizeParams& params, const AuxiliaryEmbedding& aux) {
  if (region.points.empty()) throw Error(ErrorCode::EmptyRegion, "region has no points");
  const BBox box = BBox::of(region.points);
  const double extent = box.width() > 0 ? box.width() : box.height();
  Vector<float> extra;
  if (aux.dim > 0 && aux.embed) extra = aux.embed(region);
  std::vector<Vector<float>> out;
  for (double target : params.widths) {
    SymbolRegion scaled = region;
    const double f = extent > 0 ? target / extent : 1.0;
    for (auto& p : scaled.points) p = (p - box.center()) * f;
    const PointCloud cloud = resample_region(scaled, params.points);
    for (int turn = 0; turn < 4; ++turn) {
      Vector<float> e = embed_cloud(rotate_quarter(cloud, turn), model);
      if (extra.size() > 0) {
        Vector<float> joined(e.size() + extra.size());
        joined << e, extra;
        e = joined.normalized();
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

Recognition classify(const std::vector<Vector<float>>& embeddings, const ClassDirectory& directory) {
  if (directory.entries.empty()) throw Error(ErrorCode::EmptyDirectory, "class directory is empty");
  Recognition r;
  struct Tally {
    int votes = 0;
    double cosine = 0;
  };
  std::map<std::string, Tally> tally;
  for (std::size_t v = 0; v < embeddings.size() && v < static_cast<std::size_t>(kVariants); ++v) {
    const ClassDirectory::Entry* best = nullptr;
    double best_cos = -2;
    for (const auto& e : directory.entries) {
      const double c = static_cast<double>(embeddings[v].dot(e.embedding));
      if (c > best_cos) {  // first entry wins exact ties
        best_cos = c;
        best = &e;
      }
    }
    r.votes[v] = best->class_name;
    r.vote_cosines[v] = best_cos;
    auto& t = tally[best->class_name];
    ++t.votes;
    t.cosine += best_cos;
  }
  // std::map iterates names in lexicographic order, so strict comparisons
  // leave the first name on a full tie.
  const Tally* win = nullptr;
  for (const auto& [name, t] : tally) {
    if (!win || t.votes > win->votes ||
        (t.votes == win->votes && t.cosine / t.votes > win->cosine / win->votes)) {
      win = &t;
      r.class_name = name;
    }
  }
  r.score = win->cosine / win->votes;
  return r;
}

SheetRecognition recognize_sheet(const GrayImage& image, const ModelState<float>& model,
                                 const ClassDirectory& directory, const RecognizeParams& params,
                                 const AuxiliaryEmbedding& aux) {
  SheetRecognition out;
  const VectorPathSet traced = trace(binarize(image, params.front.window, params.front.offset), params.front.trace);
  if (traced.paths.empty()) return out;
  out.segmentation = segment(traced, params.front.segment);
  const auto& regions = out.segmentation.regions;
  out.recognitions.resize(regions.size());
  parallel_for(static_cast<int>(regions.size()), worker_count(params.threads), [&](int i) {
    const auto& region = regions[static_cast<std::size_t>(i)];
    Recognition r = classify(embed_region(region, model, params, aux), directory);
    r.region_id = region.region_id;
    r.bbox = out.segmentation.image_bbox(region);
    if (r.score < params.min_score) r.class_name = "unknown";
    out.recognitions[static_cast<std::size_t>(i)] = std::move(r);
  });
  std::stable_sort(out.recognitions.begin(), out.recognitions.end(),
                   [](const Recognition& a, const Recognition& b) { return a.region_id < b.region_id; });
  return out;
}

}  // namespace ossr
