#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evpan/core.hpp"

namespace evpan {

struct SegmentMatch {
  int cls = 0;
  uint32_t gt_id = 0;   // instance id, 0 for stuff
  uint32_t pred_id = 0;
  double iou = 0.0;     // in (0.5, 1]
};

struct ScanMatches {
  std::vector<SegmentMatch> matches;
  std::vector<std::pair<int, uint32_t>> false_positives;  // unmatched pred segments
  std::vector<std::pair<int, uint32_t>> false_negatives;  // unmatched gt segments
};

// Unique matching between gt and prediction segments at IoU > 0.5.
// Segments are (class, instance) groups for things and one per class for
// stuff; points with gt == ignore are excluded from every count.
// Uniqueness of the matching is asserted, not assumed.
ScanMatches match_segments(const PanopticLabelSet& gt, const PanopticLabelSet& pred,
                           const ClassTaxonomy& tax);

// Confidence histogram for one class: J equal bins over [0, 1], mergeable
// across scans by bin-wise addition.
struct CalibrationBins {
  struct Bin {
    uint64_t count = 0;
    double sum_acc = 0.0;
    double sum_conf = 0.0;
  };
  std::vector<Bin> bins;

  CalibrationBins() = default;
  explicit CalibrationBins(int j) : bins(static_cast<size_t>(j)) {}

  int j() const { return static_cast<int>(bins.size()); }
  void add(double conf, bool acc);
  void merge(const CalibrationBins& other);
  uint64_t total() const;
};

// Bin every point inside a matched prediction segment: acc = 1 iff the
// point's gt (class, instance) equals the matched counterpart.
void accumulate_calibration(const ScanMatches& matches, const PanopticLabelSet& gt,
                            const PanopticLabelSet& pred, std::span<const double> conf,
                            const ClassTaxonomy& tax, std::vector<CalibrationBins>& per_class);

// sum_j |B_j|/N * |acc(B_j) - conf(B_j)|; 0 for empty bins (callers
// exclude empty classes from the pECE mean)
double uece(const CalibrationBins& bins);

struct EvalReport {
  struct PerClass {
    std::string name;
    bool thing = false;
    uint64_t tp = 0, fp = 0, fn = 0;
    bool pq_valid = false;   // class present in gt or pred
    double pq = 0.0;
    bool iou_valid = false;
    double iou = 0.0;
    uint64_t binned = 0;
    double uece = 0.0;       // valid when binned > 0
  };
  std::vector<PerClass> classes;
  double pq = 0.0, pq_things = 0.0, pq_stuff = 0.0;
  double miou = 0.0;
  double pece = 0.0, pece_things = 0.0, pece_stuff = 0.0;
  double upq = 0.0, upq_things = 0.0, upq_stuff = 0.0;  // (1 - pECE) * PQ, exact
};

// Streaming per-scan accumulator; scans can be evaluated in parallel and
// merged (class counts are integers, IoU values are kept per match).
class Evaluator {
 public:
  Evaluator(const ClassTaxonomy& tax, int bins_j);

  void add_scan(const PanopticLabelSet& gt, const PanopticLabelSet& pred,
                std::span<const double> conf);
  void merge(const Evaluator& other);

  // throws std::runtime_error when nothing was evaluated
  EvalReport report() const;
  const std::vector<CalibrationBins>& bins() const { return bins_; }
  const ClassTaxonomy& taxonomy() const { return tax_; }

 private:
  struct ClassAgg {
    uint64_t tp = 0, fp = 0, fn = 0;
    std::vector<double> ious;
    uint64_t inter = 0, gt_pts = 0, pred_pts = 0;  // confusion counts for mIoU
  };

  ClassTaxonomy tax_;
  std::vector<ClassAgg> agg_;
  std::vector<CalibrationBins> bins_;
};

std::string report_table(const EvalReport& r);
std::string report_csv(const EvalReport& r);
std::string calibration_csv(const std::vector<CalibrationBins>& bins, const ClassTaxonomy& tax);

}  // namespace evpan
