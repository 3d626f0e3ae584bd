#include "wmp/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "wmp/errors.hpp"
#include "wmp/rng.hpp"

namespace wmp {

long long Graph::edge_count() const {
  long long deg = 0;
  for (const auto& a : adj) deg += static_cast<long long>(a.size());
  return deg / 2;
}

bool Graph::has_truth() const {
  return !truth.empty() && std::all_of(truth.begin(), truth.end(), [](int l) { return l > 0; });
}

namespace {

void add_edge(Graph& g, long long u, long long v) {
  g.adj[u].push_back(static_cast<std::int32_t>(v));
  g.adj[v].push_back(static_cast<std::int32_t>(u));
}

void finalize_adjacency(Graph& g) {
  for (auto& a : g.adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
}

// Unrank a linear index into the strict upper triangle of an m x m block:
// idx -> (i, j) with i < j.
std::pair<long long, long long> unrank_triangular(long long idx, long long m) {
  // first guess from the quadratic formula, then fix up
  double im = static_cast<double>(m);
  double x = im - 0.5 - std::sqrt((im - 0.5) * (im - 0.5) - 2.0 * static_cast<double>(idx));
  long long i = std::max<long long>(0, std::min<long long>(m - 2, static_cast<long long>(x)));
  auto row_start = [m](long long r) { return r * (2 * m - r - 1) / 2; };
  while (row_start(i + 1) <= idx) ++i;
  while (row_start(i) > idx) --i;
  const long long j = i + 1 + (idx - row_start(i));
  return {i, j};
}

}  // namespace

Graph sample_graph(const SbmParams& params, std::uint64_t seed) {
  Graph g;
  g.n = params.n;
  g.adj.assign(g.n, {});
  g.truth.resize(g.n);
  g.orig_id.resize(g.n);
  for (long long v = 0; v < g.n; ++v) g.orig_id[v] = v + 1;

  std::vector<long long> offset(params.k + 1, 0);
  for (int c = 0; c < params.k; ++c) {
    offset[c + 1] = offset[c] + params.community_sizes[c];
    for (long long v = offset[c]; v < offset[c + 1]; ++v) g.truth[v] = c + 1;
  }

  for (int ci = 0; ci < params.k; ++ci) {
    for (int cj = ci; cj < params.k; ++cj) {
      const double p = params.Q(ci, cj);
      if (p <= 0.0) continue;
      const long long ai = offset[ci], bi = offset[ci + 1];
      const long long aj = offset[cj], bj = offset[cj + 1];
      const long long mi = bi - ai, mj = bj - aj;
      const long long total = (ci == cj) ? mi * (mi - 1) / 2 : mi * mj;
      if (total == 0) continue;

      if (p > 0.01) {
        // dense block: per-pair keyed Bernoulli, order independent
        if (ci == cj) {
          for (long long u = ai; u < bi; ++u)
            for (long long v = u + 1; v < bi; ++v)
              if (keyed_uniform(seed, static_cast<std::uint64_t>(u),
                                static_cast<std::uint64_t>(v)) < p)
                add_edge(g, u, v);
        } else {
          for (long long u = ai; u < bi; ++u)
            for (long long v = aj; v < bj; ++v)
              if (keyed_uniform(seed, static_cast<std::uint64_t>(u),
                                static_cast<std::uint64_t>(v)) < p)
                add_edge(g, u, v);
        }
      } else {
        // sparse block: geometric skips over the linearized pair index
        Rng rng(hash_combine(hash_combine(seed, 0xb10cULL + ci), static_cast<std::uint64_t>(cj)));
        const double log1mp = std::log1p(-p);
        long long idx = -1;
        while (true) {
          const double u = rng.next_open();
          const double skip = std::floor(std::log(u) / log1mp);
          if (skip > static_cast<double>(total)) break;
          idx += 1 + static_cast<long long>(skip);
          if (idx >= total) break;
          long long nu, nv;
          if (ci == cj) {
            auto [i, j] = unrank_triangular(idx, mi);
            nu = ai + i;
            nv = ai + j;
          } else {
            nu = ai + idx / mj;
            nv = aj + idx % mj;
          }
          add_edge(g, nu, nv);
        }
      }
    }
  }
  finalize_adjacency(g);
  return g;
}

SideInfo make_side_info(const std::vector<int>& truth, const SideInfoMode& mode, int k,
                        std::uint64_t seed) {
  if (k < 2) throw WrongK("make_side_info: k must be >= 2");
  SideInfo side;
  side.mode = mode;
  side.seed = seed;
  side.prior.assign(truth.size(), 0);
  const double keep = mode.delta + (1.0 - mode.delta) / static_cast<double>(k);
  for (std::size_t v = 0; v < truth.size(); ++v) {
    const int t = truth[v];
    if (t < 1 || t > k) throw InvalidParams("make_side_info: truth labels must be complete");
    const double u = keyed_uniform(seed, v, 0);
    if (mode.kind == SideInfoKind::partial) {
      if (u < mode.delta) side.prior[v] = t;
    } else {
      if (u < keep) {
        side.prior[v] = t;
      } else {
        // uniform over the k-1 wrong labels
        const double u2 = keyed_uniform(seed, v, 1);
        int wrong = static_cast<int>(u2 * (k - 1));
        if (wrong >= k - 1) wrong = k - 2;
        side.prior[v] = (wrong + 1 <= t - 1) ? wrong + 1 : wrong + 2;
      }
    }
  }
  return side;
}

namespace {

Graph build_from_pairs(const std::vector<std::pair<long long, long long>>& pairs,
                       const std::map<long long, std::string>* values = nullptr,
                       const std::vector<long long>* declared_ids = nullptr) {
  std::map<long long, long long> to_idx;
  std::vector<long long> ids;
  if (declared_ids) {
    for (long long id : *declared_ids)
      if (to_idx.emplace(id, 0).second) ids.push_back(id);
  }
  for (const auto& [u, v] : pairs) {
    if (to_idx.emplace(u, 0).second) ids.push_back(u);
    if (to_idx.emplace(v, 0).second) ids.push_back(v);
  }
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) to_idx[ids[i]] = static_cast<long long>(i);

  Graph g;
  g.n = static_cast<long long>(ids.size());
  g.adj.assign(g.n, {});
  g.truth.assign(g.n, 0);
  g.orig_id = ids;
  for (const auto& [u, v] : pairs) {
    if (u == v) continue;  // self-loop
    add_edge(g, to_idx[u], to_idx[v]);
  }
  finalize_adjacency(g);

  if (values) {
    std::map<std::string, int> value_to_label;
    for (long long id : ids) {
      auto it = values->find(id);
      if (it == values->end()) continue;
      auto [vit, fresh] =
          value_to_label.emplace(it->second, static_cast<int>(value_to_label.size()) + 1);
      g.truth[to_idx[id]] = vit->second;
      (void)fresh;
    }
  }
  return g;
}

}  // namespace

Graph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_edge_list: cannot open " + path);
  std::vector<std::pair<long long, long long>> pairs;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    long long u, v;
    if (!(ss >> u)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;  // blank line
      throw ParseError("load_edge_list: " + path + ":" + std::to_string(lineno) +
                       ": expected an integer node id");
    }
    if (!(ss >> v))
      throw ParseError("load_edge_list: " + path + ":" + std::to_string(lineno) +
                       ": expected two node ids");
    std::string extra;
    if (ss >> extra)
      throw ParseError("load_edge_list: " + path + ":" + std::to_string(lineno) +
                       ": trailing tokens");
    pairs.emplace_back(u, v);
  }
  return build_from_pairs(pairs);
}

Graph load_gml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_gml: cannot open " + path);

  std::vector<std::pair<long long, long long>> pairs;
  std::map<long long, std::string> values;
  std::vector<long long> declared;

  std::string tok;
  auto read_value_token = [&](std::string& out) -> bool {
    if (!(in >> out)) return false;
    if (!out.empty() && out.front() == '"') {
      while (out.back() != '"' || out.size() == 1) {
        std::string more;
        if (!(in >> more)) break;
        out += " " + more;
      }
      out = out.substr(1, out.size() - 2);
    }
    return true;
  };

  while (in >> tok) {
    if (tok == "node") {
      if (!(in >> tok) || tok != "[") throw ParseError("load_gml: expected [ after node");
      long long id = -1;
      bool have_id = false;
      std::string value;
      bool have_value = false;
      int depth = 1;
      while (depth > 0 && (in >> tok)) {
        if (tok == "[") ++depth;
        else if (tok == "]") --depth;
        else if (tok == "id" && depth == 1) {
          if (!(in >> id)) throw ParseError("load_gml: bad node id");
          have_id = true;
        } else if (tok == "value" && depth == 1) {
          if (!read_value_token(value)) throw ParseError("load_gml: bad node value");
          have_value = true;
        } else if (depth == 1) {
          std::string skip;
          read_value_token(skip);
        }
      }
      if (!have_id) throw ParseError("load_gml: node without id");
      declared.push_back(id);
      if (have_value) values[id] = value;
    } else if (tok == "edge") {
      if (!(in >> tok) || tok != "[") throw ParseError("load_gml: expected [ after edge");
      long long s = -1, t = -1;
      bool have_s = false, have_t = false;
      int depth = 1;
      while (depth > 0 && (in >> tok)) {
        if (tok == "[") ++depth;
        else if (tok == "]") --depth;
        else if (tok == "source" && depth == 1) {
          if (!(in >> s)) throw ParseError("load_gml: bad edge source");
          have_s = true;
        } else if (tok == "target" && depth == 1) {
          if (!(in >> t)) throw ParseError("load_gml: bad edge target");
          have_t = true;
        } else if (depth == 1) {
          std::string skip;
          read_value_token(skip);
        }
      }
      if (!have_s || !have_t) throw ParseError("load_gml: edge without source/target");
      pairs.emplace_back(s, t);
    }
  }
  return build_from_pairs(pairs, &values, &declared);
}

void attach_labels(Graph& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("attach_labels: cannot open " + path);

  std::map<long long, long long> to_idx;
  for (long long i = 0; i < g.n; ++i) to_idx[g.orig_id[i]] = i;

  std::vector<std::pair<long long, std::string>> rows;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError("attach_labels: " + path + ":" + std::to_string(lineno) +
                       ": expected node,label");
    long long node;
    try {
      node = std::stoll(line.substr(0, comma));
    } catch (const std::exception&) {
      throw ParseError("attach_labels: " + path + ":" + std::to_string(lineno) + ": bad node id");
    }
    std::string label = line.substr(comma + 1);
    while (!label.empty() && std::isspace(static_cast<unsigned char>(label.back()))) label.pop_back();
    while (!label.empty() && std::isspace(static_cast<unsigned char>(label.front()))) label.erase(0, 1);
    if (to_idx.find(node) == to_idx.end())
      throw UnknownNode("attach_labels: " + path + ":" + std::to_string(lineno) + ": node " +
                        std::to_string(node) + " not in graph");
    rows.emplace_back(node, label);
  }

  // integer labels in a small range are used verbatim; anything else is
  // mapped by order of first appearance
  bool small_ints = !rows.empty();
  for (const auto& [node, label] : rows) {
    (void)node;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(label, &pos);
      if (pos != label.size() || v < 1 || v > 64) small_ints = false;
    } catch (const std::exception&) {
      small_ints = false;
    }
    if (!small_ints) break;
  }
  std::map<std::string, int> mapping;
  for (const auto& [node, label] : rows) {
    int lab;
    if (small_ints) {
      lab = static_cast<int>(std::stoll(label));
    } else {
      lab = mapping.emplace(label, static_cast<int>(mapping.size()) + 1).first->second;
    }
    g.truth[to_idx[node]] = lab;
  }
}

Graph restrict_to_largest_component(const Graph& g) {
  std::vector<long long> comp(g.n, -1);
  long long n_comp = 0;
  std::vector<long long> best_nodes;
  std::vector<long long> stack;
  for (long long s = 0; s < g.n; ++s) {
    if (comp[s] != -1) continue;
    std::vector<long long> nodes;
    stack.push_back(s);
    comp[s] = n_comp;
    while (!stack.empty()) {
      const long long u = stack.back();
      stack.pop_back();
      nodes.push_back(u);
      for (int v : g.adj[u]) {
        if (comp[v] == -1) {
          comp[v] = n_comp;
          stack.push_back(v);
        }
      }
    }
    if (nodes.size() > best_nodes.size()) best_nodes = std::move(nodes);
    ++n_comp;
  }
  std::sort(best_nodes.begin(), best_nodes.end());

  std::vector<long long> to_new(g.n, -1);
  for (std::size_t i = 0; i < best_nodes.size(); ++i) to_new[best_nodes[i]] = static_cast<long long>(i);

  Graph out;
  out.n = static_cast<long long>(best_nodes.size());
  out.adj.assign(out.n, {});
  out.truth.assign(out.n, 0);
  out.orig_id.resize(out.n);
  for (long long i = 0; i < out.n; ++i) {
    const long long old = best_nodes[i];
    out.orig_id[i] = g.orig_id[old];
    out.truth[i] = g.truth[old];
    for (int v : g.adj[old]) out.adj[i].push_back(static_cast<std::int32_t>(to_new[v]));
    std::sort(out.adj[i].begin(), out.adj[i].end());
  }
  return out;
}

}  // namespace wmp
