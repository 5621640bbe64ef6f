#include "nimai/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nimai/common.hpp"

namespace nimai {

namespace {

struct ClassTally {
  std::size_t tp = 0, fp = 0, fn = 0;
};

std::map<int, ClassTally> tally(std::span<const int> predictions,
                                std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw DataError("f-score: prediction/label count mismatch");
  std::map<int, ClassTally> t;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) {
      t[labels[i]].tp += 1;
    } else {
      t[predictions[i]].fp += 1;
      t[labels[i]].fn += 1;
    }
  }
  return t;
}

double f_from_tally(const ClassTally& c) {
  const double p_den = double(c.tp + c.fp);
  const double r_den = double(c.tp + c.fn);
  const double p = p_den == 0.0 ? 0.0 : double(c.tp) / p_den;
  const double r = r_den == 0.0 ? 0.0 : double(c.tp) / r_den;
  return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

}  // namespace

double macro_f(std::span<const int> predictions, std::span<const int> labels,
               const std::set<int>& excluded) {
  auto t = tally(predictions, labels);
  // Score every class that occurs in the labels and is not excluded.
  std::set<int> classes;
  for (int l : labels) classes.insert(l);
  double sum = 0.0;
  std::size_t n = 0;
  for (int c : classes) {
    if (excluded.count(c)) continue;
    sum += f_from_tally(t[c]);
    n += 1;
  }
  if (n == 0) throw DataError("macro_f: every class excluded");
  return sum / double(n);
}

double single_class_f(std::span<const int> predictions,
                      std::span<const int> labels, int class_id) {
  auto t = tally(predictions, labels);
  return f_from_tally(t[class_id]);
}

std::set<int> small_classes(std::span<const int> labels,
                            std::size_t threshold) {
  std::map<int, std::size_t> counts;
  for (int l : labels) counts[l] += 1;
  std::set<int> out;
  for (auto& [c, n] : counts)
    if (n <= threshold) out.insert(c);
  return out;
}

double delta_g(double f_real, double f_aug) {
  if (f_real <= 0.0)
    throw DataError("delta_g: undefined for F_real = 0");
  return (f_aug - f_real) / f_real;
}

CvResult cv_reliability(double mean, double stddev) {
  CvResult r;
  if (mean == 0.0) {
    r.cv = std::numeric_limits<double>::infinity();
    r.reliable = false;
    return r;
  }
  r.cv = std::abs(stddev) / std::abs(mean);
  r.reliable = r.cv < 1.0;
  return r;
}

Mark classify_mark(double mean, double stddev) {
  CvResult cv = cv_reliability(mean, stddev);
  if (!cv.reliable) return Mark::kUnreliable;
  return mean > 0.0 ? Mark::kUp : Mark::kDown;
}

std::string mark_symbol(Mark m) {
  switch (m) {
    case Mark::kUp: return "up";
    case Mark::kDown: return "down";
    case Mark::kUnreliable: return "-";
    case Mark::kFailure: return "x";
  }
  return "?";
}

std::string mark_glyph(Mark m) {
  switch (m) {
    case Mark::kUp: return "↑";
    case Mark::kDown: return "↓";
    case Mark::kUnreliable: return "-";
    case Mark::kFailure: return "×";
  }
  return "?";
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / double(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / double(values.size() - 1));
}

}  // namespace nimai
