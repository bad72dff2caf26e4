#include "ossr/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>

namespace ossr {

Localization match_regions(const std::vector<BBox>& pred, const std::vector<BBox>& gt, double threshold) {
  std::vector<MatchPair> cand;
  for (std::size_t p = 0; p < pred.size(); ++p)
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double v = iou(pred[p], gt[g]);
      if (v >= threshold && v > 0) cand.push_back({static_cast<int>(p), static_cast<int>(g), v});
    }
  std::sort(cand.begin(), cand.end(), [](const MatchPair& a, const MatchPair& b) {
    return std::make_tuple(-a.iou, a.pred, a.gt) < std::make_tuple(-b.iou, b.pred, b.gt);
  });
  std::vector<char> used_p(pred.size()), used_g(gt.size());
  Localization out;
  for (const auto& c : cand) {
    if (used_p[static_cast<std::size_t>(c.pred)] || used_g[static_cast<std::size_t>(c.gt)]) continue;
    used_p[static_cast<std::size_t>(c.pred)] = used_g[static_cast<std::size_t>(c.gt)] = 1;
    out.pairs.push_back(c);
  }
  out.correct = static_cast<int>(out.pairs.size());
  out.false_regions = static_cast<int>(pred.size()) - out.correct;
  out.missing = static_cast<int>(gt.size()) - out.correct;
  return out;
}

Prf prf_from(double p, double r) { return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0}; }

Prf prf(long tp, long fp, long fn) {
  const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return prf_from(p, r);
}

std::map<std::string, Prf> MatchReport::per_class() const {
  std::map<std::string, Prf> out;
  for (const auto& [name, c] : classes) out[name] = prf(c.tp, c.fp, c.fn);
  return out;
}

Prf MatchReport::micro() const {
  ClassCounts s;
  for (const auto& [_, c] : classes) {
    s.tp += c.tp;
    s.fp += c.fp;
    s.fn += c.fn;
  }
  return prf(s.tp, s.fp, s.fn);
}

Prf MatchReport::macro() const {
  Prf m;
  if (classes.empty()) return m;
  for (const auto& [_, p] : per_class()) {
    m.precision += p.precision;
    m.recall += p.recall;
    m.f1 += p.f1;
  }
  const double n = static_cast<double>(classes.size());
  return {m.precision / n, m.recall / n, m.f1 / n};
}

Prf MatchReport::localization() const { return prf(correct, false_regions, missing); }

MatchReport evaluate(const std::vector<Labeled>& pred, const std::vector<Labeled>& gt, double threshold) {
  std::vector<BBox> pb, gb;
  for (const auto& p : pred) pb.push_back(p.bbox);
  for (const auto& g : gt) gb.push_back(g.bbox);
  const Localization loc = match_regions(pb, gb, threshold);
  MatchReport r;
  r.correct = loc.correct;
  r.false_regions = loc.false_regions;
  r.missing = loc.missing;
  for (const auto& g : gt) r.classes[g.class_name];  // every GT class appears in the table
  for (const auto& m : loc.pairs) {
    const auto& pc = pred[static_cast<std::size_t>(m.pred)].class_name;
    const auto& gc = gt[static_cast<std::size_t>(m.gt)].class_name;
    if (pc == gc) {
      ++r.classes[gc].tp;
    } else {
      ++r.classes[pc].fp;
      ++r.classes[gc].fn;
    }
  }
  return r;
}

MatchReport aggregate(const std::vector<MatchReport>& reports) {
  MatchReport out;
  for (const auto& r : reports) {
    out.correct += r.correct;
    out.false_regions += r.false_regions;
    out.missing += r.missing;
    for (const auto& [name, c] : r.classes) {
      auto& d = out.classes[name];
      d.tp += c.tp;
      d.fp += c.fp;
      d.fn += c.fn;
    }
  }
  return out;
}

std::string format_table(const MatchReport& r) {
  std::string out = "classification over regions matched at the IoU threshold\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %9s %9s %9s %6s %6s %6s\n", "class", "precision", "recall", "f1", "tp", "fp", "fn");
  out += line;
  for (const auto& [name, c] : r.classes) {
    const Prf p = prf(c.tp, c.fp, c.fn);
    std::snprintf(line, sizeof line, "%-20s %9.4f %9.4f %9.4f %6ld %6ld %6ld\n", name.c_str(), p.precision, p.recall,
                  p.f1, c.tp, c.fp, c.fn);
    out += line;
  }
  const Prf ma = r.macro(), mi = r.micro();
  std::snprintf(line, sizeof line, "%-20s %9.4f %9.4f %9.4f\n", "macro", ma.precision, ma.recall, ma.f1);
  out += line;
  std::snprintf(line, sizeof line, "%-20s %9.4f %9.4f %9.4f\n", "micro", mi.precision, mi.recall, mi.f1);
  out += line;
  std::snprintf(line, sizeof line, "regions: correct %d, false %d, missing %d\n", r.correct, r.false_regions, r.missing);
  out += line;
  return out;
}

}  // namespace ossr
