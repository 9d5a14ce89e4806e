#include "evpan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "evpan/util.hpp"

namespace evpan {

namespace {

using SegKey = std::pair<int, uint32_t>;

SegKey seg_key(const PanopticLabelSet& l, size_t i, const ClassTaxonomy& tax) {
  const int c = l.semantic[i];
  return {c, tax.thing(c) ? l.instance[i] : 0u};
}

}  // namespace

ScanMatches match_segments(const PanopticLabelSet& gt, const PanopticLabelSet& pred,
                           const ClassTaxonomy& tax) {
  if (gt.size() != pred.size() || gt.instance.size() != gt.size() ||
      pred.instance.size() != pred.size()) {
    throw std::invalid_argument("match_segments: label sets differ in size");
  }
  std::map<SegKey, uint64_t> gt_size, pred_size;
  std::map<std::pair<SegKey, SegKey>, uint64_t> inter;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (gt.semantic[i] == tax.ignore_id) continue;  // void points drop out of every count
    const SegKey gk = seg_key(gt, i, tax);
    ++gt_size[gk];
    if (pred.semantic[i] == tax.ignore_id) continue;
    const SegKey pk = seg_key(pred, i, tax);
    ++pred_size[pk];
    if (gk.first == pk.first) ++inter[{gk, pk}];
  }
  ScanMatches out;
  std::map<SegKey, SegKey> gt_match, pred_match;
  for (const auto& [pair, in] : inter) {
    const auto& [gk, pk] = pair;
    const uint64_t uni = gt_size[gk] + pred_size[pk] - in;
    const double iou = static_cast<double>(in) / static_cast<double>(uni);
    if (iou > 0.5) {
      if (gt_match.count(gk) || pred_match.count(pk)) {
        throw std::logic_error("match_segments: IoU > 0.5 matching is not unique");
      }
      gt_match[gk] = pk;
      pred_match[pk] = gk;
      out.matches.push_back({gk.first, gk.second, pk.second, iou});
    }
  }
  for (const auto& [gk, sz] : gt_size) {
    if (!gt_match.count(gk)) out.false_negatives.push_back(gk);
  }
  for (const auto& [pk, sz] : pred_size) {
    if (!pred_match.count(pk)) out.false_positives.push_back(pk);
  }
  return out;
}

void CalibrationBins::add(double conf, bool acc) {
  int b = static_cast<int>(conf * j());
  if (b >= j()) b = j() - 1;  // conf == 1 lands in the last bin
  if (b < 0) b = 0;
  Bin& bin = bins[static_cast<size_t>(b)];
  ++bin.count;
  bin.sum_acc += acc ? 1.0 : 0.0;
  bin.sum_conf += conf;
}

void CalibrationBins::merge(const CalibrationBins& other) {
  if (other.bins.size() != bins.size()) {
    throw std::invalid_argument("CalibrationBins: merging different bin counts");
  }
  for (size_t b = 0; b < bins.size(); ++b) {
    bins[b].count += other.bins[b].count;
    bins[b].sum_acc += other.bins[b].sum_acc;
    bins[b].sum_conf += other.bins[b].sum_conf;
  }
}

uint64_t CalibrationBins::total() const {
  uint64_t t = 0;
  for (const Bin& b : bins) t += b.count;
  return t;
}

void accumulate_calibration(const ScanMatches& matches, const PanopticLabelSet& gt,
                            const PanopticLabelSet& pred, std::span<const double> conf,
                            const ClassTaxonomy& tax, std::vector<CalibrationBins>& per_class) {
  if (conf.size() != gt.size()) {
    throw std::invalid_argument("accumulate_calibration: confidence array size mismatch");
  }
  std::map<SegKey, SegKey> counterpart;  // matched pred segment -> its gt segment
  for (const SegmentMatch& m : matches.matches) {
    counterpart[{m.cls, m.pred_id}] = {m.cls, m.gt_id};
  }
  for (size_t i = 0; i < gt.size(); ++i) {
    if (gt.semantic[i] == tax.ignore_id) continue;
    if (pred.semantic[i] == tax.ignore_id) continue;
    const SegKey pk = seg_key(pred, i, tax);
    const auto it = counterpart.find(pk);
    if (it == counterpart.end()) continue;  // only matched prediction segments are binned
    const bool acc = seg_key(gt, i, tax) == it->second;
    per_class[static_cast<size_t>(pk.first)].add(conf[i], acc);
  }
}

double uece(const CalibrationBins& bins) {
  const uint64_t n = bins.total();
  if (n == 0) return 0.0;
  double e = 0.0;
  for (const CalibrationBins::Bin& b : bins.bins) {
    if (b.count == 0) continue;
    const double acc = b.sum_acc / static_cast<double>(b.count);
    const double conf = b.sum_conf / static_cast<double>(b.count);
    e += static_cast<double>(b.count) / static_cast<double>(n) * std::fabs(acc - conf);
  }
  return e;
}

Evaluator::Evaluator(const ClassTaxonomy& tax, int bins_j) : tax_(tax) {
  agg_.resize(static_cast<size_t>(tax_.k));
  bins_.assign(static_cast<size_t>(tax_.k), CalibrationBins(bins_j));
}

void Evaluator::add_scan(const PanopticLabelSet& gt, const PanopticLabelSet& pred,
                         std::span<const double> conf) {
  const ScanMatches matches = match_segments(gt, pred, tax_);
  for (const SegmentMatch& m : matches.matches) {
    ClassAgg& a = agg_[static_cast<size_t>(m.cls)];
    ++a.tp;
    a.ious.push_back(m.iou);
  }
  for (const auto& [cls, id] : matches.false_positives) ++agg_[static_cast<size_t>(cls)].fp;
  for (const auto& [cls, id] : matches.false_negatives) ++agg_[static_cast<size_t>(cls)].fn;

  for (size_t i = 0; i < gt.size(); ++i) {
    const int g = gt.semantic[i];
    if (g == tax_.ignore_id) continue;
    const int p = pred.semantic[i];
    ClassAgg& ga = agg_[static_cast<size_t>(g)];
    ++ga.gt_pts;
    if (p == g) ++ga.inter;
    if (p != tax_.ignore_id) ++agg_[static_cast<size_t>(p)].pred_pts;
  }

  accumulate_calibration(matches, gt, pred, conf, tax_, bins_);
}

void Evaluator::merge(const Evaluator& other) {
  if (other.tax_.k != tax_.k) throw std::invalid_argument("Evaluator: taxonomy mismatch");
  for (size_t c = 0; c < agg_.size(); ++c) {
    agg_[c].tp += other.agg_[c].tp;
    agg_[c].fp += other.agg_[c].fp;
    agg_[c].fn += other.agg_[c].fn;
    agg_[c].ious.insert(agg_[c].ious.end(), other.agg_[c].ious.begin(), other.agg_[c].ious.end());
    agg_[c].inter += other.agg_[c].inter;
    agg_[c].gt_pts += other.agg_[c].gt_pts;
    agg_[c].pred_pts += other.agg_[c].pred_pts;
    bins_[c].merge(other.bins_[c]);
  }
}

EvalReport Evaluator::report() const {
  EvalReport r;
  r.classes.resize(static_cast<size_t>(tax_.k));

  double pq_sum = 0, pq_th = 0, pq_st = 0;
  int pq_n = 0, pq_n_th = 0, pq_n_st = 0;
  double iou_sum = 0;
  int iou_n = 0;
  double ece_sum = 0, ece_th = 0, ece_st = 0;
  int ece_n = 0, ece_n_th = 0, ece_n_st = 0;

  for (int c = 0; c < tax_.k; ++c) {
    const ClassAgg& a = agg_[static_cast<size_t>(c)];
    EvalReport::PerClass& pc = r.classes[static_cast<size_t>(c)];
    pc.name = tax_.names[static_cast<size_t>(c)];
    pc.thing = tax_.thing(c);
    pc.tp = a.tp;
    pc.fp = a.fp;
    pc.fn = a.fn;
    if (a.tp + a.fp + a.fn > 0) {
      pc.pq_valid = true;
      pc.pq = pairwise_sum(a.ious) /
              (static_cast<double>(a.tp) + 0.5 * static_cast<double>(a.fp) +
               0.5 * static_cast<double>(a.fn));
      pq_sum += pc.pq;
      ++pq_n;
      if (pc.thing) {
        pq_th += pc.pq;
        ++pq_n_th;
      } else {
        pq_st += pc.pq;
        ++pq_n_st;
      }
    }
    const uint64_t uni = a.gt_pts + a.pred_pts - a.inter;
    if (uni > 0) {
      pc.iou_valid = true;
      pc.iou = static_cast<double>(a.inter) / static_cast<double>(uni);
      iou_sum += pc.iou;
      ++iou_n;
    }
    pc.binned = bins_[static_cast<size_t>(c)].total();
    if (pc.binned > 0) {
      pc.uece = uece(bins_[static_cast<size_t>(c)]);
      ece_sum += pc.uece;
      ++ece_n;
      if (pc.thing) {
        ece_th += pc.uece;
        ++ece_n_th;
      } else {
        ece_st += pc.uece;
        ++ece_n_st;
      }
    }
  }
  if (pq_n == 0 && iou_n == 0) {
    throw std::runtime_error("Evaluator::report: no classes were evaluated");
  }
  r.pq = pq_n ? pq_sum / pq_n : 0.0;
  r.pq_things = pq_n_th ? pq_th / pq_n_th : 0.0;
  r.pq_stuff = pq_n_st ? pq_st / pq_n_st : 0.0;
  r.miou = iou_n ? iou_sum / iou_n : 0.0;
  r.pece = ece_n ? ece_sum / ece_n : 0.0;
  r.pece_things = ece_n_th ? ece_th / ece_n_th : 0.0;
  r.pece_stuff = ece_n_st ? ece_st / ece_n_st : 0.0;
  r.upq = (1.0 - r.pece) * r.pq;
  r.upq_things = (1.0 - r.pece_things) * r.pq_things;
  r.upq_stuff = (1.0 - r.pece_stuff) * r.pq_stuff;
  return r;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string report_table(const EvalReport& r) {
  std::ostringstream os;
  os << "overall   uPQ " << fmt(r.upq) << "  PQ " << fmt(r.pq) << "  pECE " << fmt(r.pece)
     << "  mIoU " << fmt(r.miou) << "\n";
  os << "things    uPQ " << fmt(r.upq_things) << "  PQ " << fmt(r.pq_things) << "  pECE "
     << fmt(r.pece_things) << "\n";
  os << "stuff     uPQ " << fmt(r.upq_stuff) << "  PQ " << fmt(r.pq_stuff) << "  pECE "
     << fmt(r.pece_stuff) << "\n\n";
  os << "class                 kind   TP    FP    FN      PQ     IoU    uECE\n";
  for (const auto& pc : r.classes) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-20s %-6s %5llu %5llu %5llu  %6s  %6s  %6s\n",
                  pc.name.c_str(), pc.thing ? "thing" : "stuff",
                  static_cast<unsigned long long>(pc.tp), static_cast<unsigned long long>(pc.fp),
                  static_cast<unsigned long long>(pc.fn),
                  pc.pq_valid ? fmt(pc.pq).c_str() : "-",
                  pc.iou_valid ? fmt(pc.iou).c_str() : "-",
                  pc.binned > 0 ? fmt(pc.uece).c_str() : "-");
    os << line;
  }
  return os.str();
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "scope,uPQ,PQ,pECE,mIoU\n";
  os << "overall," << fmt(r.upq) << "," << fmt(r.pq) << "," << fmt(r.pece) << "," << fmt(r.miou)
     << "\n";
  os << "things," << fmt(r.upq_things) << "," << fmt(r.pq_things) << "," << fmt(r.pece_things)
     << ",\n";
  os << "stuff," << fmt(r.upq_stuff) << "," << fmt(r.pq_stuff) << "," << fmt(r.pece_stuff)
     << ",\n";
  os << "\nclass,kind,TP,FP,FN,PQ,IoU,uECE\n";
  for (const auto& pc : r.classes) {
    os << pc.name << "," << (pc.thing ? "thing" : "stuff") << "," << pc.tp << "," << pc.fp << ","
       << pc.fn << "," << (pc.pq_valid ? fmt(pc.pq) : "") << ","
       << (pc.iou_valid ? fmt(pc.iou) : "") << "," << (pc.binned > 0 ? fmt(pc.uece) : "") << "\n";
  }
  return os.str();
}

std::string calibration_csv(const std::vector<CalibrationBins>& bins, const ClassTaxonomy& tax) {
  std::ostringstream os;
  os << "class,bin_low,bin_high,count,mean_conf,mean_acc\n";
  for (int c = 0; c < tax.k; ++c) {
    const CalibrationBins& cb = bins[static_cast<size_t>(c)];
    for (int b = 0; b < cb.j(); ++b) {
      const auto& bin = cb.bins[static_cast<size_t>(b)];
      const double lo = static_cast<double>(b) / cb.j();
      const double hi = static_cast<double>(b + 1) / cb.j();
      os << tax.names[static_cast<size_t>(c)] << "," << fmt(lo) << "," << fmt(hi) << ","
         << bin.count << ",";
      if (bin.count > 0) {
        os << fmt(bin.sum_conf / static_cast<double>(bin.count)) << ","
           << fmt(bin.sum_acc / static_cast<double>(bin.count));
      } else {
        os << "0,0";
      }
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace evpan
