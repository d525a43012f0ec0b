#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace openad {

/// m x m point counts; entry (g, p) counts points with ground truth g
/// predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);
  void merge(const ConfusionMatrix& other);
  std::uint64_t total() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

/// Throws on length mismatch or an index outside [0, classes).
ConfusionMatrix accumulate_confusion(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                                     std::size_t classes);

struct ClassMetrics {
  std::string label;
  double iou = 0.0;        // TP / (TP + FP + FN)
  double accuracy = 0.0;   // recall, TP / (TP + FN)
  double precision = 0.0;  // TP / (TP + FP)
  std::uint64_t support = 0;    // TP + FN
  std::uint64_t predicted = 0;  // TP + FP
  bool included = true;         // counted in mIoU
};

/// mIoU averages per-class IoU over classes with TP + FP + FN > 0; mAcc
/// averages recall over included classes that have ground-truth points;
/// Acc is trace / total. Classes with no ground truth and no predictions
/// are listed in `excluded`.
struct MetricsReport {
  double miou = 0.0;
  double acc = 0.0;
  double macc = 0.0;
  std::uint64_t total_points = 0;
  std::vector<ClassMetrics> classes;
  std::vector<std::string> excluded;

  nlohmann::json to_json() const;
};

/// `labels` names the classes in the report (defaults to their indices).
/// Throws Error(kData) on an empty matrix.
MetricsReport compute_metrics(const ConfusionMatrix& confusion, const std::vector<std::string>& labels = {});

}  // namespace openad
