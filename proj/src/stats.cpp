#include "wmp/stats.hpp"

#include <algorithm>

#include "wmp/errors.hpp"

namespace wmp {

void ConfusionAccumulator::reset(int classes) {
  k = classes;
  informed.assign(static_cast<std::size_t>(k) * k, 0);
  uninformed_by_truth.assign(k, 0);
}

void ConfusionAccumulator::add(int pred, int truth, bool is_uninformed) {
  if (is_uninformed) {
    ++uninformed_by_truth[truth - 1];
  } else {
    ++informed[static_cast<std::size_t>(pred - 1) * k + (truth - 1)];
  }
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
  for (std::size_t i = 0; i < informed.size(); ++i) informed[i] += other.informed[i];
  for (int i = 0; i < k; ++i) uninformed_by_truth[i] += other.uninformed_by_truth[i];
}

ErrStats ConfusionAccumulator::stats(const std::vector<std::vector<int>>& equiv_sets) const {
  ErrStats s;
  s.k = k;
  s.class_error.assign(k, 0.0);
  s.class_count.assign(k, 0);

  std::vector<long long> informed_by_truth(k, 0);
  for (int t = 0; t < k; ++t) {
    for (int p = 0; p < k; ++p) informed_by_truth[t] += informed[static_cast<std::size_t>(p) * k + t];
    s.class_count[t] = informed_by_truth[t] + uninformed_by_truth[t];
  }

  s.class_error_informed.assign(k, 0.0);
  s.class_informed = informed_by_truth;
  long long total = 0, total_bad = 0, total_informed = 0, total_wrong = 0;
  for (int t = 0; t < k; ++t) {
    const long long wrong =
        informed_by_truth[t] - informed[static_cast<std::size_t>(t) * k + t];
    const long long bad = wrong + uninformed_by_truth[t];
    s.n_wrong += wrong;
    s.n_uninformed += uninformed_by_truth[t];
    total += s.class_count[t];
    total_bad += bad;
    total_informed += informed_by_truth[t];
    total_wrong += wrong;
    if (s.class_count[t] > 0) {
      s.class_error[t] = static_cast<double>(bad) / static_cast<double>(s.class_count[t]);
      s.worst_class_error = std::max(s.worst_class_error, s.class_error[t]);
    }
    if (informed_by_truth[t] > 0) {
      s.class_error_informed[t] =
          static_cast<double>(wrong) / static_cast<double>(informed_by_truth[t]);
      s.worst_class_error_informed =
          std::max(s.worst_class_error_informed, s.class_error_informed[t]);
    }
  }
  s.n_eval = total;
  if (total == 0) throw EmptyEvaluationSet("misclassification stats: no evaluated nodes");
  s.error_rate = static_cast<double>(total_bad) / static_cast<double>(total);
  if (total_informed > 0)
    s.error_rate_informed = static_cast<double>(total_wrong) / static_cast<double>(total_informed);

  // pairwise set errors over the equivalence partition (informed nodes)
  const int m = static_cast<int>(equiv_sets.size());
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      long long in_a = 0, in_b = 0, a_to_b = 0, b_to_a = 0;
      for (int t : equiv_sets[a]) {
        in_a += informed_by_truth[t - 1];
        for (int p : equiv_sets[b]) a_to_b += informed[static_cast<std::size_t>(p - 1) * k + (t - 1)];
      }
      for (int t : equiv_sets[b]) {
        in_b += informed_by_truth[t - 1];
        for (int p : equiv_sets[a]) b_to_a += informed[static_cast<std::size_t>(p - 1) * k + (t - 1)];
      }
      const double pab = in_a > 0 ? static_cast<double>(a_to_b) / static_cast<double>(in_a) : 0.0;
      const double pba = in_b > 0 ? static_cast<double>(b_to_a) / static_cast<double>(in_b) : 0.0;
      s.set_pairs.push_back({a, b});
      s.set_error.push_back(std::max(pab, pba));
    }
  }
  return s;
}

ErrStats misclassification_stats(const std::vector<int>& pred, const std::vector<int>& truth,
                                 int k, const std::vector<std::vector<int>>& equiv_sets,
                                 const std::vector<char>& eval_mask,
                                 const std::vector<char>& uninformed) {
  if (pred.size() != truth.size()) throw DimensionMismatch("misclassification_stats: pred/truth size");
  if (!eval_mask.empty() && eval_mask.size() != pred.size())
    throw DimensionMismatch("misclassification_stats: mask size");
  if (!uninformed.empty() && uninformed.size() != pred.size())
    throw DimensionMismatch("misclassification_stats: uninformed size");

  ConfusionAccumulator acc(k);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!eval_mask.empty() && !eval_mask[i]) continue;
    const bool uninf = !uninformed.empty() && uninformed[i];
    if (truth[i] < 1 || truth[i] > k) throw InvalidParams("misclassification_stats: truth label out of range");
    if (!uninf && (pred[i] < 1 || pred[i] > k))
      throw InvalidParams("misclassification_stats: pred label out of range");
    acc.add(uninf ? 1 : pred[i], truth[i], uninf);
  }
  return acc.stats(equiv_sets);
}

}  // namespace wmp
