#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nimai/common.hpp"

namespace nimai::nn {

// Offset+length of a named slice of the flat parameter vector.
struct Seg {
  std::size_t off = 0;
  std::size_t n = 0;
};

// One flat value vector plus a matching gradient vector. Every trainable
// component of a model registers its segment here, in a fixed order, so the
// whole model serializes, optimizes and gradient-checks as a single vector.
class ParamStore {
 public:
  Seg add(std::string name, std::size_t count) {
    Seg seg{values_.size(), count};
    names_.emplace_back(std::move(name));
    segs_.push_back(seg);
    values_.resize(values_.size() + count, 0.0);
    grads_.resize(values_.size(), 0.0);
    return seg;
  }

  std::size_t size() const { return values_.size(); }

  std::span<double> values(Seg s) { return {values_.data() + s.off, s.n}; }
  std::span<const double> values(Seg s) const {
    return {values_.data() + s.off, s.n};
  }
  std::span<double> grads(Seg s) { return {grads_.data() + s.off, s.n}; }

  std::vector<double>& flat_values() { return values_; }
  const std::vector<double>& flat_values() const { return values_; }
  std::vector<double>& flat_grads() { return grads_; }
  const std::vector<double>& flat_grads() const { return grads_; }

  void zero_grads() { grads_.assign(grads_.size(), 0.0); }

  void set_flat_values(const std::vector<double>& v) {
    if (v.size() != values_.size())
      throw TrainingError("parameter vector size mismatch on load");
    values_ = v;
  }

  // Segment name owning flat index i; used in optimizer diagnostics.
  std::string segment_of(std::size_t i) const {
    for (std::size_t s = 0; s < segs_.size(); ++s)
      if (i >= segs_[s].off && i < segs_[s].off + segs_[s].n) return names_[s];
    return "?";
  }

 private:
  std::vector<double> values_;
  std::vector<double> grads_;
  std::vector<std::string> names_;
  std::vector<Seg> segs_;
};

}  // namespace nimai::nn
