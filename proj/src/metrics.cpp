#include "openad/metrics.hpp"

#include "openad/error.hpp"

namespace openad {

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
  if (truth >= classes_ || predicted >= classes_) {
    throw_usage("confusion index (" + std::to_string(truth) + ", " + std::to_string(predicted) + ") outside " +
                std::to_string(classes_) + " classes");
  }
  counts_[truth * classes_ + predicted] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw_usage("cannot merge confusion matrices of different sizes");
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

ConfusionMatrix accumulate_confusion(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                                     std::size_t classes) {
  if (predicted.size() != truth.size()) {
    throw_usage("prediction count " + std::to_string(predicted.size()) + " does not match ground-truth count " +
                std::to_string(truth.size()));
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < predicted.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& confusion, const std::vector<std::string>& labels) {
  const std::size_t m = confusion.classes();
  if (!labels.empty() && labels.size() != m) throw_usage("label count does not match confusion matrix");
  MetricsReport report;
  report.total_points = confusion.total();
  if (report.total_points == 0) throw_data("cannot compute metrics from an empty confusion matrix");

  std::uint64_t trace = 0;
  double iou_sum = 0.0;
  double acc_sum = 0.0;
  std::size_t iou_count = 0;
  std::size_t acc_count = 0;
  for (std::size_t c = 0; c < m; ++c) {
    ClassMetrics cls;
    cls.label = labels.empty() ? std::to_string(c) : labels[c];
    const std::uint64_t tp = confusion.at(c, c);
    for (std::size_t k = 0; k < m; ++k) {
      cls.support += confusion.at(c, k);
      cls.predicted += confusion.at(k, c);
    }
    trace += tp;
    const std::uint64_t fn = cls.support - tp;
    const std::uint64_t fp = cls.predicted - tp;
    const std::uint64_t uni = tp + fp + fn;
    cls.included = uni > 0;
    if (cls.included) {
      cls.iou = static_cast<double>(tp) / static_cast<double>(uni);
      iou_sum += cls.iou;
      ++iou_count;
    } else {
      report.excluded.push_back(cls.label);
    }
    if (cls.support > 0) {
      cls.accuracy = static_cast<double>(tp) / static_cast<double>(cls.support);
      acc_sum += cls.accuracy;
      ++acc_count;
    }
    if (cls.predicted > 0) cls.precision = static_cast<double>(tp) / static_cast<double>(cls.predicted);
    report.classes.push_back(std::move(cls));
  }
  report.acc = static_cast<double>(trace) / static_cast<double>(report.total_points);
  report.miou = iou_count > 0 ? iou_sum / static_cast<double>(iou_count) : 0.0;
  report.macc = acc_count > 0 ? acc_sum / static_cast<double>(acc_count) : 0.0;
  return report;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json classes_json = nlohmann::json::array();
  for (const auto& c : classes) {
    classes_json.push_back({{"label", c.label},
                            {"iou", c.iou},
                            {"accuracy", c.accuracy},
                            {"precision", c.precision},
                            {"support", c.support},
                            {"predicted", c.predicted},
                            {"included", c.included}});
  }
  return {{"mIoU", miou},       {"Acc", acc},          {"mAcc", macc},
          {"total_points", total_points}, {"classes", classes_json}, {"excluded", excluded}};
}

}  // namespace openad
