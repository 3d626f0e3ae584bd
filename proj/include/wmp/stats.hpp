#pragma once
#include <array>
#include <vector>

#include "wmp/linalg.hpp"

namespace wmp {

// Misclassification summary. Uninformed nodes (no usable boundary
// information) count as errors in error_rate and the per-class rates; the
// set errors are computed over informed predictions only.
struct ErrStats {
  int k = 0;
  long long n_eval = 0;
  long long n_wrong = 0;       // informed and pred != truth
  long long n_uninformed = 0;
  double error_rate = 0.0;
  Vec class_error;             // conditional on each true label
  std::vector<long long> class_count;
  double worst_class_error = 0.0;  // max over classes with support
  // same rates over informed nodes only (uninformed reported separately)
  double error_rate_informed = 0.0;
  Vec class_error_informed;
  std::vector<long long> class_informed;
  double worst_class_error_informed = 0.0;
  std::vector<std::array<int, 2>> set_pairs;  // indices into equiv_sets
  Vec set_error;               // Err_{S,T} = max of the two cross rates
};

// Running pred x truth counts; mergeable across trials and threads.
struct ConfusionAccumulator {
  int k = 0;
  std::vector<long long> informed;             // k x k, [pred-1][truth-1]
  std::vector<long long> uninformed_by_truth;  // k

  explicit ConfusionAccumulator(int classes = 0) { reset(classes); }
  void reset(int classes);
  void add(int pred, int truth, bool is_uninformed);
  void merge(const ConfusionAccumulator& other);
  ErrStats stats(const std::vector<std::vector<int>>& equiv_sets) const;
};

ErrStats misclassification_stats(const std::vector<int>& pred, const std::vector<int>& truth,
                                 int k, const std::vector<std::vector<int>>& equiv_sets,
                                 const std::vector<char>& eval_mask,
                                 const std::vector<char>& uninformed = {});

}  // namespace wmp
