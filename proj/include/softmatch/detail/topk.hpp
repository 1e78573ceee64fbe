#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace softmatch::detail {

// Bounded selection of the K largest (value, index) pairs of a row that is
// streamed in increasing index order. The heap root is the worst kept entry:
// smallest value, and the largest index among equal values, so ties at the
// K-th value keep the lower bank index.
class TopK {
 public:
  struct Entry {
    float value;
    std::uint32_t index;
  };

  explicit TopK(std::size_t k = 1) : k_(k) { heap_.reserve(k); }

  void reset(std::size_t k) {
    k_ = k;
    heap_.clear();
    heap_.reserve(k);
    threshold_ = -std::numeric_limits<float>::infinity();
  }

  // Values not strictly above this cannot enter the selection.
  float threshold() const noexcept { return threshold_; }

  void push(float value, std::uint32_t index) {
    if (heap_.size() < k_) {
      heap_.push_back({value, index});
      std::push_heap(heap_.begin(), heap_.end(), ranks_before);
      if (heap_.size() == k_) threshold_ = heap_.front().value;
      return;
    }
    if (!(value > heap_.front().value)) return;
    std::pop_heap(heap_.begin(), heap_.end(), ranks_before);
    heap_.back() = {value, index};
    std::push_heap(heap_.begin(), heap_.end(), ranks_before);
    threshold_ = heap_.front().value;
  }

  std::size_t size() const noexcept { return heap_.size(); }

  // Selected entries, best first (value descending, index ascending).
  std::vector<Entry> sorted() const {
    std::vector<Entry> out = heap_;
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
  }

  // Mean of the selected values, accumulated in double in sorted order.
  double mean() const {
    if (heap_.empty()) return 0.0;
    scratch_ = heap_;
    std::sort(scratch_.begin(), scratch_.end(), ranks_before);
    double sum = 0.0;
    for (const Entry& e : scratch_) sum += e.value;
    return sum / static_cast<double>(scratch_.size());
  }

  static bool ranks_before(const Entry& a, const Entry& b) noexcept {
    return a.value > b.value || (a.value == b.value && a.index < b.index);
  }

 private:
  std::size_t k_;
  std::vector<Entry> heap_;
  mutable std::vector<Entry> scratch_;
  float threshold_ = -std::numeric_limits<float>::infinity();
};

}  // namespace softmatch::detail
