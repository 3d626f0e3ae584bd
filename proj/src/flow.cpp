#include "wmp/flow.hpp"

#include <algorithm>
#include <cmath>

#include "wmp/errors.hpp"

namespace wmp {

namespace {

void mark_support(FlowScratch& ws, const LocalTree& t) {
  const std::size_t n = t.size();
  ws.is_boundary.assign(n, 0);
  for (std::int32_t v : t.boundary) ws.is_boundary[v] = 1;
  ws.supported.assign(n, 0);
  for (std::size_t v = n; v-- > 0;) {
    if (ws.is_boundary[v]) {
      ws.supported[v] = 1;
      continue;
    }
    for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c)
      if (ws.supported[c]) {
        ws.supported[v] = 1;
        break;
      }
  }
}

bool needs_log_space(const LocalTree& t, double r) {
  const double d = static_cast<double>(t.max_depth());
  return d * std::fabs(std::log(r)) > 600.0;
}

double logsumexp2(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Bottom-up conductances in linear space. ws.cond[v] = 1/R(subtree at v),
// ws.split[v] = sum of supported child conductances.
void conductances_linear(FlowScratch& ws, const LocalTree& t, double r) {
  const std::size_t n = t.size();
  ws.cond.assign(n, 0.0);
  ws.split.assign(n, 0.0);
  std::vector<double> rpow(t.max_depth() + 1);
  rpow[0] = 1.0;
  for (int d = 1; d <= t.max_depth(); ++d) rpow[d] = rpow[d - 1] * r;

  for (int d = t.max_depth(); d >= 0; --d) {
    const double rd = rpow[d];
    for (std::int32_t v = t.layer_begin[d + 1]; v-- > t.layer_begin[d];) {
      if (!ws.supported[v]) continue;
      if (ws.is_boundary[v]) {
        ws.cond[v] = 1.0 / rd;
        continue;
      }
      double s = 0.0;
      for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c) s += ws.cond[c];
      ws.split[v] = s;
      // R(v) = r^{|v|} + 1/s; cond = s / (r^{|v|} s + 1)
      ws.cond[v] = s / (rd * s + 1.0);
    }
  }
}

// Same recursion carried in logs for deep trees where r^depth overflows.
void conductances_log(FlowScratch& ws, const LocalTree& t, double r) {
  const std::size_t n = t.size();
  const double logr = std::log(r);
  ws.cond.assign(n, -std::numeric_limits<double>::infinity());  // log conductances
  ws.split.assign(n, -std::numeric_limits<double>::infinity()); // log split sums

  for (int d = t.max_depth(); d >= 0; --d) {
    for (std::int32_t v = t.layer_begin[d + 1]; v-- > t.layer_begin[d];) {
      if (!ws.supported[v]) continue;
      if (ws.is_boundary[v]) {
        ws.cond[v] = -static_cast<double>(d) * logr;
        continue;
      }
      double m = -std::numeric_limits<double>::infinity();
      for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c)
        m = std::max(m, ws.cond[c]);
      double acc = 0.0;
      for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c)
        if (ws.supported[c]) acc += std::exp(ws.cond[c] - m);
      const double logS = m + std::log(acc);
      ws.split[v] = logS;
      const double logR = logsumexp2(static_cast<double>(d) * logr, -logS);
      ws.cond[v] = -logR;
    }
  }
}

}  // namespace

double effective_resistance(const LocalTree& t, double r) {
  if (r <= 0.0) throw InvalidParams("effective_resistance: r must be positive");
  if (t.boundary.empty()) throw EmptyBoundary("effective_resistance: tree has no boundary");
  if (t.boundary.size() == 1 && t.boundary[0] == 0) return 0.0;  // root is its own sink

  FlowScratch ws;
  mark_support(ws, t);
  if (needs_log_space(t, r)) {
    conductances_log(ws, t, r);
    return std::exp(-ws.split[0]);
  }
  conductances_linear(ws, t, r);
  return 1.0 / ws.split[0];
}

namespace {

// boundary == the whole deepest layer (the default construction)
bool boundary_is_deepest_layer(const LocalTree& t) {
  if (t.boundary.empty()) return false;
  const int d = t.max_depth();
  const std::int32_t lo = t.layer_begin[d], hi = t.layer_begin[d + 1];
  return static_cast<std::int32_t>(t.boundary.size()) == hi - lo && t.boundary.front() == lo &&
         t.boundary.back() == hi - 1;
}

}  // namespace

void min_energy_flow_into(FlowAssignment& f, FlowScratch& ws, const LocalTree& t, double r) {
  if (r <= 0.0) throw InvalidParams("min_energy_flow: r must be positive");
  if (t.boundary.empty()) throw EmptyBoundary("min_energy_flow: tree has no boundary");
  const std::size_t n = t.size();
  f.r = r;

  if (t.boundary.size() == 1 && t.boundary[0] == 0) {
    f.flow.assign(n, 0.0);
    f.flow[0] = 1.0;
    f.energy = 0.0;
    f.effective_resistance = 0.0;
    return;
  }

  if (!needs_log_space(t, r)) {
    // fused passes: a node is flow-supported iff its conductance is
    // positive, so no separate support marking is needed. When the boundary
    // is the whole deepest layer its constant conductance never needs to be
    // materialized.
    const int maxd = t.max_depth();
    const bool fast = boundary_is_deepest_layer(t);
    if (!fast) {
      ws.is_boundary.assign(n, 0);
      for (std::int32_t v : t.boundary) ws.is_boundary[v] = 1;
    }

    ws.cond.resize(n);
    ws.split.resize(n);
    f.flow.resize(n);
    std::vector<double> rpow(maxd + 1);
    rpow[0] = 1.0;
    for (int d = 1; d <= maxd; ++d) rpow[d] = rpow[d - 1] * r;
    const double deep_cond = 1.0 / rpow[maxd];

    for (int d = maxd; d >= 0; --d) {
      if (fast && d == maxd) continue;
      const std::int32_t lo = t.layer_begin[d], hi = t.layer_begin[d + 1];
      const double rd = rpow[d];
      const double inv_rd = 1.0 / rd;
      const bool gather_deep = fast && d == maxd - 1;
      for (std::int32_t v = lo; v < hi; ++v) {
        if (!fast && ws.is_boundary[v]) {
          ws.cond[v] = inv_rd;
          ws.split[v] = 0.0;
          continue;
        }
        double s;
        if (gather_deep) {
          s = deep_cond * static_cast<double>(t.children_end(v) - t.children_begin(v));
        } else {
          s = 0.0;
          for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c) s += ws.cond[c];
        }
        ws.split[v] = s;
        ws.cond[v] = s == 0.0 ? 0.0 : s / (rd * s + 1.0);
      }
    }

    f.flow[0] = 1.0;
    double energy = 0.0;
    for (int d = 0; d < maxd; ++d) {
      const std::int32_t lo = t.layer_begin[d], hi = t.layer_begin[d + 1];
      const double rd = rpow[d + 1];
      const bool spread_deep = fast && d == maxd - 1;
      for (std::int32_t v = lo; v < hi; ++v) {
        const double fv = f.flow[v];
        const std::int32_t cb = t.children_begin(v), ce = t.children_end(v);
        if (cb == ce) continue;
        if (fv == 0.0 || (!fast && ws.is_boundary[v])) {
          for (std::int32_t c = cb; c < ce; ++c) f.flow[c] = 0.0;
          continue;
        }
        const double scale = fv / ws.split[v];
        if (spread_deep) {
          const double ic = scale * deep_cond;
          for (std::int32_t c = cb; c < ce; ++c) f.flow[c] = ic;
          energy += static_cast<double>(ce - cb) * ic * ic * rd;
        } else {
          for (std::int32_t c = cb; c < ce; ++c) {
            const double ic = scale * ws.cond[c];
            f.flow[c] = ic;
            energy += ic * ic * rd;
          }
        }
      }
    }
    f.energy = energy;
    f.effective_resistance = 1.0 / ws.split[0];
    return;
  }

  f.flow.assign(n, 0.0);
  mark_support(ws, t);
  conductances_log(ws, t, r);
  const double logr = std::log(r);
  std::vector<double> logflow(n, -std::numeric_limits<double>::infinity());
  logflow[0] = 0.0;
  f.flow[0] = 1.0;
  double energy = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    if (logflow[v] == -std::numeric_limits<double>::infinity() || ws.is_boundary[v]) continue;
    for (std::int32_t c = t.children_begin(v); c < t.children_end(v); ++c) {
      if (!ws.supported[c]) continue;
      const double lf = logflow[v] + ws.cond[c] - ws.split[v];
      logflow[c] = lf;
      f.flow[c] = std::exp(lf);
      energy += std::exp(2.0 * lf + static_cast<double>(t.depth_of(c)) * logr);
    }
  }
  f.energy = energy;
  f.effective_resistance = std::exp(-ws.split[0]);
}

FlowAssignment min_energy_flow(const LocalTree& t, double r) {
  FlowAssignment f;
  FlowScratch ws;
  min_energy_flow_into(f, ws, t, r);
  return f;
}

FlowAssignment uniform_boundary_flow(const LocalTree& t, double r) {
  if (r <= 0.0) throw InvalidParams("uniform_boundary_flow: r must be positive");
  if (t.boundary.empty()) throw EmptyBoundary("uniform_boundary_flow: tree has no boundary");
  if (t.parent.size() != t.size())
    throw InvalidParams("uniform_boundary_flow: tree lacks parent pointers");
  const std::size_t n = t.size();
  FlowAssignment f;
  f.r = r;
  f.flow.assign(n, 0.0);
  const double share = 1.0 / static_cast<double>(t.boundary.size());
  for (std::int32_t v : t.boundary) f.flow[v] = share;
  // conservation upward; the boundary is an antichain, so nothing stacks
  for (std::size_t v = n; v-- > 1;) f.flow[t.parent[v]] += f.flow[v];

  double energy = 0.0;
  double rpow = 1.0;
  for (int d = 1; d <= t.max_depth(); ++d) {
    rpow *= r;
    for (std::int32_t v = t.layer_begin[d]; v < t.layer_begin[d + 1]; ++v)
      energy += f.flow[v] * f.flow[v] * rpow;
  }
  f.energy = energy;
  f.effective_resistance = energy;  // exact only when this flow is minimal
  return f;
}

double regular_tree_energy(long long b, double conductance, long long depth) {
  if (b < 1) throw InvalidParams("regular_tree_energy: b must be >= 1");
  if (!(conductance > 0.0)) throw InvalidParams("regular_tree_energy: conductance must be positive");
  if (depth < 0) throw InvalidParams("regular_tree_energy: negative depth");
  const double x = 1.0 / (static_cast<double>(b) * conductance);
  double sum = 0.0, term = 1.0;
  for (long long d = 1; d <= depth; ++d) {
    term *= x;
    sum += term;
    if (term > 1e300) break;  // divergent direction; the sum is already huge
  }
  return sum;
}

double regular_tree_energy_infinite(long long b, double conductance) {
  if (b < 1) throw InvalidParams("regular_tree_energy_infinite: b must be >= 1");
  if (!(conductance > 0.0))
    throw InvalidParams("regular_tree_energy_infinite: conductance must be positive");
  const double bc = static_cast<double>(b) * conductance;
  if (bc <= 1.0)
    throw DivergentEnergy("regular_tree_energy_infinite: b * conductance <= 1, energy diverges");
  return 1.0 / (bc - 1.0);
}

}  // namespace wmp
