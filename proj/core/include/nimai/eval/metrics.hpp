#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

namespace nimai {

// Unweighted mean of per-class F-scores over retained classes. A class
// whose precision and recall are both zero contributes 0.
double macro_f(std::span<const int> predictions, std::span<const int> labels,
               const std::set<int>& excluded);

double single_class_f(std::span<const int> predictions,
                      std::span<const int> labels, int class_id);

// Classes with at most `threshold` test samples, for the exclusion rule.
std::set<int> small_classes(std::span<const int> labels,
                            std::size_t threshold = 20);

// Relative gain (F_aug - F_real) / F_real; F_real must be positive.
double delta_g(double f_real, double f_aug);

struct CvResult {
  double cv = 0.0;
  bool reliable = false;
};

// Coefficient of variation |std| / |mean|; a measurement is reliable only
// when CV < 1. Zero mean is unreliable by convention (CV -> infinity).
CvResult cv_reliability(double mean, double stddev);

enum class Mark { kUp, kDown, kUnreliable, kFailure };

Mark classify_mark(double mean, double stddev);
// Machine-friendly symbol for CSV ("up", "down", "-", "x") and the
// arrow glyph used in text tables.
std::string mark_symbol(Mark m);
std::string mark_glyph(Mark m);

double mean_of(std::span<const double> values);
double sample_std(std::span<const double> values);

}  // namespace nimai
