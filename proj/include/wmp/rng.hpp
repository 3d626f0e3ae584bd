#pragma once
#include <cstdint>
#include <cmath>
#include <vector>

namespace wmp {

// splitmix64 finalizer; full avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h + 0x9e3779b97f4a7c15ULL * (v + 0x632be59bd9b4e019ULL));
}

// Counter-based generator: cheap to construct, seedable, and splittable.
// Derived streams (split / hash_combine) are independent of draw order,
// which keeps parallel runs reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // uniform in [0,1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0,1); safe as a log() argument
  double next_open() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  Rng split(std::uint64_t stream) const { return Rng(hash_combine(state_, stream)); }

 private:
  std::uint64_t state_;
};

// One-shot uniform in [0,1) keyed by (seed, a, b); order-independent draws.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return static_cast<double>(hash_combine(hash_combine(seed, a), b) >> 11) * 0x1.0p-53;
}

// Single-key variant; this is exactly a splitmix64 stream indexed by a.
inline double keyed_uniform1(std::uint64_t seed, std::uint64_t a) {
  return static_cast<double>(mix64(seed + (a + 1) * 0x9e3779b97f4a7c15ULL) >> 11) * 0x1.0p-53;
}

// Tabulated Poisson sampler. The table covers all but ~1e-15 of the mass
// (the residual maps to the heaviest entry) and draws in O(1) through the
// alias method.
class PoissonTable {
 public:
  explicit PoissonTable(double mean) : mean_(mean) {
    std::vector<double> probs;
    if (mean <= 0.0) {
      probs.push_back(1.0);
    } else {
      double p = std::exp(-mean);
      double cum = p;
      probs.push_back(p);
      std::size_t j = 0;
      const std::size_t hard_cap = static_cast<std::size_t>(mean + 20.0 * std::sqrt(mean) + 64.0);
      while (cum < 1.0 - 1e-15 && j < hard_cap) {
        ++j;
        p *= mean / static_cast<double>(j);
        cum += p;
        probs.push_back(p);
      }
      std::size_t heaviest = 0;
      for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[heaviest]) heaviest = i;
      probs[heaviest] += 1.0 - cum;
    }
    build_alias(probs);
  }

  // one uniform drives both the slot pick and the accept test: the integer
  // part selects the slot, the fractional part is uniform given the slot
  int sample(Rng& rng) const {
    const double x = rng.next_double() * static_cast<double>(cut_.size());
    std::size_t slot = static_cast<std::size_t>(x);
    if (slot >= cut_.size()) slot = cut_.size() - 1;
    const double frac = x - static_cast<double>(slot);
    return frac < cut_[slot] ? static_cast<int>(slot) : alias_[slot];
  }

  double mean() const { return mean_; }

 private:
  void build_alias(const std::vector<double>& probs) {
    const std::size_t m = probs.size();
    cut_.assign(m, 1.0);
    alias_.assign(m, 0);
    std::vector<double> scaled(m);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < m; ++i) {
      scaled[i] = probs[i] * static_cast<double>(m);
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      const std::size_t g = large.back();
      small.pop_back();
      cut_[s] = scaled[s];  // own mass first, the remainder goes to the alias
      alias_[s] = static_cast<int>(g);
      scaled[g] -= 1.0 - scaled[s];
      if (scaled[g] < 1.0) {
        large.pop_back();
        small.push_back(g);
      }
    }
    for (std::size_t g : large) cut_[g] = 1.0;
    for (std::size_t s : small) cut_[s] = 1.0;
  }

  double mean_;
  std::vector<double> cut_;   // acceptance threshold per slot
  std::vector<int> alias_;
};

}  // namespace wmp
