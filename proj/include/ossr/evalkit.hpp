#pragma once

#include <map>
#include <string>
#include <vector>

#include "ossr/geometry.hpp"

namespace ossr {

struct Labeled {
  std::string class_name;
  BBox bbox;
};

struct MatchPair {
  int pred = 0;
  int gt = 0;
  double iou = 0.0;
};

struct Localization {
  int correct = 0;
  int false_regions = 0;
  int missing = 0;
  std::vector<MatchPair> pairs;
};

/// Greedy one-to-one matching in descending IoU; equal IoUs go to the lower
/// (pred, gt) index pair.
Localization match_regions(const std::vector<BBox>& pred, const std::vector<BBox>& gt, double iou_threshold = 0.5);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators give zero.
Prf prf(long tp, long fp, long fn);
Prf prf_from(double precision, double recall);

struct ClassCounts {
  long tp = 0, fp = 0, fn = 0;
};

struct MatchReport {
  int correct = 0, false_regions = 0, missing = 0;
  std::map<std::string, ClassCounts> classes;  // over matched pairs only

  std::map<std::string, Prf> per_class() const;
  Prf micro() const;
  Prf macro() const;  // mean over classes
  Prf localization() const;
};

/// Classification is scored over localized (IoU-matched) regions: a matched
/// pair with equal classes is a TP for that class; otherwise an FP for the
/// predicted class and an FN for the true one.
MatchReport evaluate(const std::vector<Labeled>& pred, const std::vector<Labeled>& gt, double iou_threshold = 0.5);

/// Counts summed over sheets.
MatchReport aggregate(const std::vector<MatchReport>& reports);

/// Per-class precision / recall / F1 table followed by the localization counts.
std::string format_table(const MatchReport& report);

}  // namespace ossr
