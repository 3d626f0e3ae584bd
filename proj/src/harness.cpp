#include "wmp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wmp/baselines.hpp"
#include "wmp/errors.hpp"
#include "wmp/flow.hpp"
#include "wmp/graph.hpp"
#include "wmp/parallel.hpp"
#include "wmp/tree.hpp"

namespace wmp {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::vector<int>> equiv_or_singletons(const BroadcastKernel& kernel) {
  if (kernel.has_w && !kernel.equiv_sets.empty()) return kernel.equiv_sets;
  std::vector<std::vector<int>> out;
  for (int l = 1; l <= kernel.k; ++l) out.push_back({l});
  return out;
}

std::string format_set_err(const ErrStats& stats, const std::vector<std::vector<int>>& equiv) {
  std::ostringstream out;
  auto set_name = [&](int idx) {
    std::string s;
    for (std::size_t i = 0; i < equiv[idx].size(); ++i) {
      if (i) s += '+';
      s += std::to_string(equiv[idx][i]);
    }
    return s;
  };
  for (std::size_t i = 0; i < stats.set_pairs.size(); ++i) {
    if (i) out << ';';
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", stats.set_error[i]);
    out << set_name(stats.set_pairs[i][0]) << '-' << set_name(stats.set_pairs[i][1]) << ':' << buf;
  }
  return out.str();
}

bool has_boundary_prior(const LocalTree& t) {
  for (std::int32_t v : t.boundary)
    if (t.prior[v] != 0) return true;
  return false;
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::gw_tree: return "gw_tree";
    case Scenario::sbm: return "sbm";
    case Scenario::polblogs: return "polblogs";
  }
  return "?";
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::wmp: return "wmp";
    case Estimator::amp_uniform_flow: return "amp_uniform_flow";
    case Estimator::bp: return "bp";
    case Estimator::spectral: return "spectral";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "gw_tree" || s == "gw-tree" || s == "gw") return Scenario::gw_tree;
  if (s == "sbm") return Scenario::sbm;
  if (s == "polblogs") return Scenario::polblogs;
  throw ConfigError("unknown scenario: " + s);
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "wmp") return Estimator::wmp;
  if (s == "amp" || s == "amp_uniform_flow") return Estimator::amp_uniform_flow;
  if (s == "bp") return Estimator::bp;
  if (s == "spectral") return Estimator::spectral;
  throw ConfigError("unknown estimator: " + s);
}

void ExperimentConfig::validate() const {
  if (deltas.empty()) throw ConfigError("config: empty delta grid");
  if (depths.empty()) throw ConfigError("config: empty depth grid");
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  if (estimators.empty()) throw ConfigError("config: no estimators selected");
  for (double d : deltas)
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("config: delta must be in (0,1)");
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (depths[i] < 0) throw ConfigError("config: negative depth");
    if (i > 0 && depths[i] <= depths[i - 1]) throw ConfigError("config: depths must be ascending");
  }
  switch (scenario) {
    case Scenario::gw_tree:
      if (gw_mean.rows == 0 || gw_mean.rows != gw_mean.cols)
        throw ConfigError("config: gw_tree needs a square mean matrix");
      for (Estimator e : estimators)
        if (e == Estimator::spectral) throw ConfigError("config: spectral needs a graph scenario");
      break;
    case Scenario::sbm:
      if (!sbm) throw ConfigError("config: sbm scenario needs model parameters");
      if (depths.front() < 1) throw ConfigError("config: sbm depths must be >= 1");
      break;
    case Scenario::polblogs:
      if (side_kind != SideInfoKind::partial)
        throw ConfigError("config: polblogs uses partial side information");
      if (depths.front() < 1) throw ConfigError("config: polblogs depths must be >= 1");
      break;
  }
}

GwSweep gw_monte_carlo(const ExperimentConfig& config) {
  config.validate();
  GwSweep sweep;
  sweep.kernel = kernel_from_mean_matrix(config.gw_mean);
  const BroadcastKernel& kernel = sweep.kernel;
  const int k = kernel.k;
  const int max_depth = config.depths.back();
  const double r = 1.0 / (kernel.theta * kernel.theta);
  const auto tables = offspring_tables(config.gw_mean);

  const int nD = static_cast<int>(config.deltas.size());
  const int nd = static_cast<int>(config.depths.size());
  const int nE = static_cast<int>(config.estimators.size());
  const int npoints = nD * nd * nE;
  const int threads = resolve_threads(config.threads);
  const bool treatment2 = config.side_kind == SideInfoKind::partial &&
                          config.treatment == PartialTreatment::all_revealed;
  // priors are only consumed on the boundary layer unless treatment (2)
  // pulls in revealed nodes anywhere in the tree
  const bool boundary_only_reveal = !treatment2 && nd == 1;
  // parent/depth arrays are only touched by uniform flow and cutsets
  const bool light_trees =
      !treatment2 && std::count(config.estimators.begin(), config.estimators.end(),
                                Estimator::amp_uniform_flow) == 0;

  std::vector<std::vector<ConfusionAccumulator>> acc(
      threads, std::vector<ConfusionAccumulator>(npoints, ConfusionAccumulator(k)));

  const auto t0 = std::chrono::steady_clock::now();
  parallel_blocks(static_cast<std::size_t>(config.trials), threads,
                  [&](int tid, std::size_t lo, std::size_t hi) {
    LocalTree tree, sub;
    FlowAssignment flow;
    FlowScratch fws;
    MessageState st;
    BpScratch bps;
    InitOptions init_opts;
    init_opts.treatment = config.treatment;
    SideInfoMode mode{config.side_kind, 0.0};
    BpOptions bp_opts;
    bp_opts.root_prior = kernel.stationary;

    for (std::size_t trial = lo; trial < hi; ++trial) {
      Rng rng(hash_combine(hash_combine(config.seed, 0x6477ee57ULL), trial));
      sample_gw_tree_into(tree, tables, kernel.stationary, 0, max_depth, rng, 1u << 26,
                          light_trees);
      const int truth = tree.label[0];

      for (int di = 0; di < nD; ++di) {
        mode.delta = config.deltas[di];
        const std::uint64_t reveal_seed =
            hash_combine(hash_combine(hash_combine(config.seed, 0x4e5ea1ULL), trial),
                         static_cast<std::uint64_t>(di));
        reveal_priors(tree, mode, k, reveal_seed, boundary_only_reveal);

        for (int dj = 0; dj < nd; ++dj) {
          const int d = config.depths[dj];
          LocalTree* T = &tree;
          if (d != tree.depth_cap || treatment2) {
            truncate_to_depth(tree, d, sub);
            T = &sub;
          }
          if (treatment2) {
            set_boundary_revealed_cutset(*T);
          } else if (!boundary_only_reveal) {
            // evidence lives on the boundary layer only
            const int reach = std::min(d, T->max_depth());
            for (std::int32_t v = 0; v < T->layer_begin[reach]; ++v) T->prior[v] = 0;
          }

          const bool informative = !T->boundary.empty() && has_boundary_prior(*T);
          for (int ei = 0; ei < nE; ++ei) {
            const Estimator est = config.estimators[ei];
            int pred = 0;
            bool uninformed = !informative;
            if (informative) {
              switch (est) {
                case Estimator::wmp:
                case Estimator::amp_uniform_flow:
                  try {
                    if (est == Estimator::amp_uniform_flow)
                      flow = uniform_boundary_flow(*T, r);
                    else
                      min_energy_flow_into(flow, fws, *T, r);
                    init_messages_into(st, *T, mode, flow, kernel, init_opts);
                    propagate_to_root(st);
                    pred = classify_root(st).label;
                  } catch (const NoBoundaryLabels&) {
                    uninformed = true;
                  }
                  break;
                case Estimator::bp:
                  pred = bp_classify_root(*T, kernel.K, mode, bp_opts, &bps).label;
                  break;
                case Estimator::spectral:
                  throw ConfigError("gw_monte_carlo: spectral estimator unsupported");
              }
            }
            acc[tid][(di * nd + dj) * nE + ei].add(uninformed ? 1 : pred, truth, uninformed);
          }
        }
      }
    }
  });

  const double wall = seconds_since(t0);
  const auto equiv = equiv_or_singletons(kernel);
  for (int di = 0; di < nD; ++di)
    for (int dj = 0; dj < nd; ++dj)
      for (int ei = 0; ei < nE; ++ei) {
        ConfusionAccumulator total(k);
        for (int tid = 0; tid < threads; ++tid) total.merge(acc[tid][(di * nd + dj) * nE + ei]);
        GwPoint p;
        p.depth = config.depths[dj];
        p.delta = config.deltas[di];
        p.estimator = config.estimators[ei];
        p.trials = config.trials;
        p.stats = total.stats(equiv);
        p.wall_s = wall;
        sweep.points.push_back(std::move(p));
      }
  return sweep;
}

SbmSweep sbm_monte_carlo(const ExperimentConfig& config) {
  config.validate();
  SbmSweep sweep;
  sweep.kernel = build_kernel(*config.sbm);
  const BroadcastKernel& kernel = sweep.kernel;
  const auto equiv = equiv_or_singletons(kernel);

  const int nD = static_cast<int>(config.deltas.size());
  const int nd = static_cast<int>(config.depths.size());
  const int nE = static_cast<int>(config.estimators.size());
  std::vector<ConfusionAccumulator> acc(nD * nd * nE, ConfusionAccumulator(kernel.k));

  const auto t0 = std::chrono::steady_clock::now();
  for (long long trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t graph_seed = hash_combine(hash_combine(config.seed, 0x5b3ULL), trial);
    const Graph g = sample_graph(*config.sbm, graph_seed);
    for (int di = 0; di < nD; ++di) {
      SideInfoMode mode{config.side_kind, config.deltas[di]};
      const SideInfo side = make_side_info(
          g.truth, mode, kernel.k,
          hash_combine(hash_combine(graph_seed, 0x51de1ULL), static_cast<std::uint64_t>(di)));
      for (int ei = 0; ei < nE; ++ei) {
        const Estimator est = config.estimators[ei];
        if (est != Estimator::wmp && est != Estimator::amp_uniform_flow)
          throw ConfigError("sbm_monte_carlo: only wmp/amp estimators supported");
        ClassifyOptions opts;
        opts.depths = config.depths;
        opts.uniform_flow = est == Estimator::amp_uniform_flow;
        opts.treatment = config.treatment;
        opts.threads = config.threads;
        opts.exclude_revealed = config.side_kind == SideInfoKind::partial;
        const auto results = wmp_classify_graph(g, side, kernel, opts);
        for (int dj = 0; dj < nd; ++dj) {
          const auto& res = results[dj];
          auto& a = acc[(di * nd + dj) * nE + ei];
          for (long long v = 0; v < g.n; ++v) {
            if (!res.evaluated[v]) continue;
            a.add(res.uninformed[v] ? 1 : res.pred[v], g.truth[v], res.uninformed[v]);
          }
        }
      }
    }
  }

  const double wall = seconds_since(t0);
  for (int di = 0; di < nD; ++di)
    for (int dj = 0; dj < nd; ++dj)
      for (int ei = 0; ei < nE; ++ei) {
        SbmPoint p;
        p.depth = config.depths[dj];
        p.delta = config.deltas[di];
        p.estimator = config.estimators[ei];
        p.trials = config.trials;
        p.stats = acc[(di * nd + dj) * nE + ei].stats(equiv);
        p.wall_s = wall;
        sweep.points.push_back(std::move(p));
      }
  return sweep;
}

std::string resolve_polblogs_path(const std::string& configured) {
  if (!configured.empty()) return configured;
  const char* dir = std::getenv("WMP_DATA_DIR");
  if (dir != nullptr && *dir != '\0') return std::string(dir) + "/polblogs.gml";
  return "data/polblogs.gml";
}

PolblogsResult polblogs_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::string path = resolve_polblogs_path(config.dataset_path);
  {
    std::ifstream probe(path);
    if (!probe)
      throw DatasetMissing(
          "polblogs dataset not found at '" + path +
          "'. Download http://www-personal.umich.edu/~mejn/netdata/polblogs.zip, unzip, and "
          "place polblogs.gml there (or set WMP_DATA_DIR / --data).");
  }
  Graph g = restrict_to_largest_component(load_gml(path));
  if (!g.has_truth()) throw ParseError("polblogs: gml file carries no node values");

  PolblogsResult out;
  out.n_nodes = g.n;
  out.n_edges = g.edge_count();

  const int nD = static_cast<int>(config.deltas.size());
  const long long reps = config.trials;
  const bool want_spectral =
      std::count(config.estimators.begin(), config.estimators.end(), Estimator::spectral) > 0;
  std::vector<Estimator> mp_estimators;
  for (Estimator e : config.estimators)
    if (e == Estimator::wmp || e == Estimator::amp_uniform_flow) mp_estimators.push_back(e);

  const int nd = static_cast<int>(config.depths.size());
  const int nM = static_cast<int>(mp_estimators.size());
  // error[task][slot]: slots are (estimator, depth) pairs then spectral
  const int slots = nM * nd + (want_spectral ? 1 : 0);
  std::vector<Vec> errors(static_cast<std::size_t>(nD) * reps, Vec(slots, 0.0));

  parallel_blocks(static_cast<std::size_t>(nD) * reps, config.threads,
                  [&](int, std::size_t lo, std::size_t hi) {
    for (std::size_t task = lo; task < hi; ++task) {
      const int di = static_cast<int>(task / reps);
      const long long rep = static_cast<long long>(task % reps);
      SideInfoMode mode = SideInfoMode::partial(config.deltas[di]);
      const SideInfo side = make_side_info(
          g.truth, mode, 2,
          hash_combine(hash_combine(config.seed, static_cast<std::uint64_t>(di)), rep));
      const BroadcastKernel kernel = estimate_kernel_from_revealed(g, side, 2);

      for (int mi = 0; mi < nM; ++mi) {
        ClassifyOptions opts;
        opts.depths = config.depths;
        opts.uniform_flow = mp_estimators[mi] == Estimator::amp_uniform_flow;
        opts.treatment = config.treatment;
        opts.exclude_revealed = true;
        opts.threads = 1;
        const auto results = wmp_classify_graph(g, side, kernel, opts);
        for (int dj = 0; dj < nd; ++dj) errors[task][mi * nd + dj] = results[dj].stats.error_rate;
      }
      if (want_spectral) {
        const auto labels = spectral_partition(g, side);
        std::vector<char> eval(g.n, 0);
        for (long long v = 0; v < g.n; ++v) eval[v] = side.prior[v] == 0;
        const auto st = misclassification_stats(labels, g.truth, 2, {{1}, {2}}, eval);
        errors[task][slots - 1] = st.error_rate;
      }
    }
  });

  for (int di = 0; di < nD; ++di) {
    for (int mi = 0; mi < nM; ++mi)
      for (int dj = 0; dj < nd; ++dj) {
        PolblogsPoint p;
        p.delta = config.deltas[di];
        p.depth = config.depths[dj];
        p.estimator = mp_estimators[mi];
        for (long long rep = 0; rep < reps; ++rep)
          p.per_seed_error.push_back(errors[di * reps + rep][mi * nd + dj]);
        p.median_error = median(p.per_seed_error);
        out.points.push_back(std::move(p));
      }
    if (want_spectral) {
      PolblogsPoint p;
      p.delta = config.deltas[di];
      p.depth = 0;
      p.estimator = Estimator::spectral;
      for (long long rep = 0; rep < reps; ++rep)
        p.per_seed_error.push_back(errors[di * reps + rep][slots - 1]);
      p.median_error = median(p.per_seed_error);
      out.points.push_back(std::move(p));
    }
  }
  return out;
}

double median(Vec values) {
  if (values.empty()) throw EmptyEvaluationSet("median: empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<ResultRow> to_rows(const GwSweep& sweep, const ExperimentConfig& config) {
  std::vector<ResultRow> rows;
  for (const auto& p : sweep.points) {
    ResultRow r;
    r.scenario = to_string(Scenario::gw_tree);
    r.estimator = to_string(p.estimator);
    r.depth = p.depth;
    r.delta = p.delta;
    r.snr = sweep.kernel.snr;
    r.seed = config.seed;
    r.error_rate = p.stats.error_rate;
    r.set_err = format_set_err(p.stats, equiv_or_singletons(sweep.kernel));
    r.uninformed_rate =
        p.stats.n_eval ? static_cast<double>(p.stats.n_uninformed) / p.stats.n_eval : 0.0;
    r.wall_s = p.wall_s;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> to_rows(const SbmSweep& sweep, const ExperimentConfig& config) {
  std::vector<ResultRow> rows;
  for (const auto& p : sweep.points) {
    ResultRow r;
    r.scenario = to_string(Scenario::sbm);
    r.estimator = to_string(p.estimator);
    r.depth = p.depth;
    r.delta = p.delta;
    r.snr = sweep.kernel.snr;
    r.seed = config.seed;
    r.error_rate = p.stats.error_rate;
    r.set_err = format_set_err(p.stats, equiv_or_singletons(sweep.kernel));
    r.uninformed_rate =
        p.stats.n_eval ? static_cast<double>(p.stats.n_uninformed) / p.stats.n_eval : 0.0;
    r.wall_s = p.wall_s;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> to_rows(const PolblogsResult& res, const ExperimentConfig& config) {
  std::vector<ResultRow> rows;
  for (const auto& p : res.points) {
    ResultRow r;
    r.scenario = to_string(Scenario::polblogs);
    r.estimator = to_string(p.estimator);
    r.depth = p.depth;
    r.delta = p.delta;
    r.snr = 0.0;
    r.seed = config.seed;
    r.error_rate = p.median_error;
    r.set_err = "";
    r.uninformed_rate = 0.0;
    r.wall_s = 0.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_results(const std::string& path, const std::vector<ResultRow>& rows, bool json_mirror) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_results: cannot open " + path);
  out << "scenario,estimator,depth,delta,snr,seed,error_rate,set_err,uninformed_rate,wall_s\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.estimator << ',' << r.depth << ',' << fmt(r.delta) << ','
        << fmt(r.snr) << ',' << r.seed << ',' << fmt(r.error_rate) << ',' << r.set_err << ','
        << fmt(r.uninformed_rate) << ',' << fmt(r.wall_s) << '\n';
  }
  out.close();
  if (!out) throw IoError("write_results: write failed for " + path);

  if (json_mirror) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
      j.push_back({{"scenario", r.scenario},
                   {"estimator", r.estimator},
                   {"depth", r.depth},
                   {"delta", r.delta},
                   {"snr", r.snr},
                   {"seed", r.seed},
                   {"error_rate", r.error_rate},
                   {"set_err", r.set_err},
                   {"uninformed_rate", r.uninformed_rate},
                   {"wall_s", r.wall_s}});
    }
    std::ofstream jout(path + ".json", std::ios::binary);
    if (!jout) throw IoError("write_results: cannot open " + path + ".json");
    jout << j.dump(2) << '\n';
  }
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_results_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("read_results_csv: empty file");
  if (line != "scenario,estimator,depth,delta,snr,seed,error_rate,set_err,uninformed_rate,wall_s")
    throw ParseError("read_results_csv: unexpected header");
  std::vector<ResultRow> rows;
  long long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    f.push_back(cur);
    if (f.size() != 10)
      throw ParseError("read_results_csv: line " + std::to_string(lineno) + ": bad field count");
    ResultRow r;
    try {
      r.scenario = f[0];
      r.estimator = f[1];
      r.depth = std::stoi(f[2]);
      r.delta = std::stod(f[3]);
      r.snr = std::stod(f[4]);
      r.seed = std::stoull(f[5]);
      r.error_rate = std::stod(f[6]);
      r.set_err = f[7];
      r.uninformed_rate = std::stod(f[8]);
      r.wall_s = std::stod(f[9]);
    } catch (const std::exception&) {
      throw ParseError("read_results_csv: line " + std::to_string(lineno) + ": bad value");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<ResultRow> rows;
  switch (config.scenario) {
    case Scenario::gw_tree: rows = to_rows(gw_monte_carlo(config), config); break;
    case Scenario::sbm: rows = to_rows(sbm_monte_carlo(config), config); break;
    case Scenario::polblogs: rows = to_rows(polblogs_experiment(config), config); break;
  }
  if (!config.output_path.empty()) write_results(config.output_path, rows, config.json_mirror);
  return rows;
}

}  // namespace wmp
