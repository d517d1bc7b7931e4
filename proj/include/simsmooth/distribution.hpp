#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "simsmooth/error.hpp"

namespace simsmooth {

struct Mass {
  WordId w2;
  double p;
};

// P(.|w1) restricted to its support: strictly positive entries sorted by w2.
class SparseDistribution {
 public:
  SparseDistribution() = default;

  // Zero entries are dropped; entries are sorted by id.
  explicit SparseDistribution(std::vector<Mass> entries) : entries_(std::move(entries)) {
    std::erase_if(entries_, [](const Mass& m) { return !(m.p > 0.0); });
    std::sort(entries_.begin(), entries_.end(), [](const Mass& a, const Mass& b) { return a.w2 < b.w2; });
  }

  static SparseDistribution from_dense(std::span<const double> dense) {
    std::vector<Mass> out;
    for (std::size_t i = 0; i < dense.size(); ++i)
      if (dense[i] > 0.0) out.push_back({static_cast<WordId>(i), dense[i]});
    SparseDistribution d;
    d.entries_ = std::move(out);
    return d;
  }

  std::span<const Mass> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  double operator[](WordId w2) const noexcept {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), w2, [](const Mass& m, WordId w) { return m.w2 < w; });
    return (it != entries_.end() && it->w2 == w2) ? it->p : 0.0;
  }

  double total() const noexcept {
    double s = 0.0;
    for (const auto& m : entries_) s += m.p;
    return s;
  }

 private:
  std::vector<Mass> entries_;
};

// Visits every w2 in the union of both supports once, in id order, with
// p(w2) and q(w2) (either may be 0).
template <class F>
void merge_supports(const SparseDistribution& p, const SparseDistribution& q, F&& f) {
  auto a = p.entries();
  auto b = q.entries();
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].w2 < b[j].w2)) {
      f(a[i].w2, a[i].p, 0.0);
      ++i;
    } else if (i == a.size() || b[j].w2 < a[i].w2) {
      f(b[j].w2, 0.0, b[j].p);
      ++j;
    } else {
      f(a[i].w2, a[i].p, b[j].p);
      ++i;
      ++j;
    }
  }
}

// Visits only w2 with p(w2) > 0 and q(w2) > 0.
template <class F>
void common_support(const SparseDistribution& p, const SparseDistribution& q, F&& f) {
  auto a = p.entries();
  auto b = q.entries();
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].w2 < b[j].w2) {
      ++i;
    } else if (b[j].w2 < a[i].w2) {
      ++j;
    } else {
      f(a[i].w2, a[i].p, b[j].p);
      ++i;
      ++j;
    }
  }
}

}  // namespace simsmooth
