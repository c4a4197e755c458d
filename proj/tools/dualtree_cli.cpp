// Command-line harness: load CSV datasets, build trees, run any task with
// any tree/traversal combination, emit results, and optionally check them
// against the brute-force oracles.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "dualtree/datagen.hpp"
#include "dualtree/emst.hpp"
#include "dualtree/kde.hpp"
#include "dualtree/neighbor.hpp"
#include "dualtree/oracle.hpp"
#include "dualtree/rangesearch.hpp"

namespace {

using namespace dualtree;

constexpr int kExitOk = 0;
constexpr int kExitParseError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitVerifyFailed = 3;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RunConfig {
  std::string task;
  std::string tree = "kd";
  std::string traversal = "dual-dfs";
  std::string bound = "combined";
  std::uint32_t k = 0;
  double range_min = 0.0;
  double range_max = -1.0;
  std::string kernel = "gaussian";
  double bandwidth = 1.0;
  double epsilon = -1.0;
  bool normalize = false;
  std::uint32_t leaf_size = 20;
  int workers = 1;
  bool exclude_self = false;
  bool verify = false;
  bool stats = false;
  bool unsafe_range_prune = false;
  std::string query_path;
  std::string reference_path;
  std::string output_path = "-";
};

void add_run_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--task", cfg.task, "one of knn,kfn,range,emst,kde")->required();
  cmd->add_option("--tree", cfg.tree)->check(CLI::IsMember({"kd", "cover"}));
  cmd->add_option("--traversal", cfg.traversal)
      ->check(CLI::IsMember({"dual-dfs", "dual-bfs", "single", "dual-dfs-parallel"}));
  cmd->add_option("--bound-mode", cfg.bound)
      ->check(CLI::IsMember({"combined", "b1", "b2"}));
  cmd->add_option("--k", cfg.k, "neighbor count for knn/kfn");
  cmd->add_option("--range-min", cfg.range_min);
  cmd->add_option("--range-max", cfg.range_max);
  cmd->add_option("--kernel", cfg.kernel)
      ->check(CLI::IsMember({"gaussian", "epanechnikov"}));
  cmd->add_option("--bandwidth", cfg.bandwidth);
  cmd->add_option("--epsilon", cfg.epsilon);
  cmd->add_flag("--normalize", cfg.normalize);
  cmd->add_option("--leaf-size", cfg.leaf_size);
  cmd->add_option("--workers", cfg.workers);
  cmd->add_flag("--exclude-self", cfg.exclude_self);
  cmd->add_flag("--verify", cfg.verify, "check results against the brute-force oracle");
  cmd->add_flag("--stats", cfg.stats, "print traversal statistics");
  cmd->add_flag("--unsafe-range-prune", cfg.unsafe_range_prune,
                "range search: prune on d_min membership alone (known to drop results)");
  cmd->add_option("--query", cfg.query_path, "query dataset CSV");
  cmd->add_option("--reference", cfg.reference_path, "reference dataset CSV")->required();
  cmd->add_option("--output", cfg.output_path, "output CSV path, '-' for stdout");
}

TreeKind tree_kind(const std::string& s) {
  return s == "cover" ? TreeKind::kCoverTree : TreeKind::kKdTree;
}

TraversalKind traversal_kind(const std::string& s) {
  if (s == "dual-bfs") return TraversalKind::kDualBreadthFirst;
  if (s == "single") return TraversalKind::kSingleTree;
  if (s == "dual-dfs-parallel") return TraversalKind::kDualDepthFirstParallel;
  return TraversalKind::kDualDepthFirst;
}

BoundMode bound_mode(const std::string& s) {
  if (s == "b1") return BoundMode::kB1;
  if (s == "b2") return BoundMode::kB2;
  return BoundMode::kCombined;
}

KernelType kernel_type(const std::string& s) {
  return s == "epanechnikov" ? KernelType::kEpanechnikov : KernelType::kGaussian;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void validate_run_config(const RunConfig& cfg) {
  const bool neighbor_task = cfg.task == "knn" || cfg.task == "kfn";
  if (!neighbor_task && cfg.task != "range" && cfg.task != "emst" && cfg.task != "kde") {
    throw UsageError("unknown task '" + cfg.task + "'");
  }
  if (neighbor_task && cfg.k == 0) throw UsageError("--k is required for knn/kfn");
  if (cfg.task == "range" && cfg.range_max < 0.0) {
    throw UsageError("--range-max is required for range");
  }
  if (cfg.task == "kde" && cfg.epsilon < 0.0) {
    throw UsageError("--epsilon is required for kde");
  }
  if (cfg.task == "emst") {
    if (cfg.traversal == "single" || cfg.traversal == "dual-dfs-parallel") {
      throw UsageError("emst supports dual-dfs and dual-bfs only");
    }
    if (!cfg.query_path.empty() && cfg.query_path != cfg.reference_path) {
      throw UsageError("emst runs on the reference set alone");
    }
  }
  if (cfg.workers < 1) throw UsageError("--workers must be at least 1");
  if (cfg.leaf_size < 1) throw UsageError("--leaf-size must be at least 1");
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open output file: " + path);
  return file;
}

void print_stats(const TraversalStats& stats) {
  std::cerr << "base_cases=" << stats.base_cases << " scores=" << stats.scores
            << " prunes=" << stats.prunes << "\n";
}

// ---- verification ----

int verify_neighbors(const NeighborResults& got, const NeighborResults& want) {
  std::size_t bad = 0;
  for (std::uint32_t q = 0; q < got.queries(); ++q) {
    for (std::uint32_t i = 0; i < got.k(); ++i) {
      if (got.dist(q, i) != want.dist(q, i)) {
        if (bad < 10) {
          std::cerr << "verify: query " << q << " slot " << i << ": got "
                    << fmt(got.dist(q, i)) << " want " << fmt(want.dist(q, i)) << "\n";
        }
        ++bad;
      }
    }
  }
  if (bad) std::cerr << "verify: " << bad << " neighbor distance mismatches\n";
  return bad ? kExitVerifyFailed : kExitOk;
}

int verify_range(const RangeResults& got, const RangeResults& want) {
  std::size_t bad = 0;
  for (std::uint32_t q = 0; q < got.rows.size(); ++q) {
    std::set<std::uint32_t> g, w;
    for (const auto& [r, d] : got.rows[q]) g.insert(r);
    for (const auto& [r, d] : want.rows[q]) w.insert(r);
    if (g != w) {
      if (bad < 10) {
        std::cerr << "verify: query " << q << ": got " << g.size() << " matches, want "
                  << w.size() << "\n";
      }
      ++bad;
    }
  }
  if (bad) std::cerr << "verify: " << bad << " queries with wrong match sets\n";
  return bad ? kExitVerifyFailed : kExitOk;
}

int verify_emst(const EmstResult& got, const EmstResult& want) {
  const double scale = std::max(1.0, std::abs(want.total_weight));
  if (std::abs(got.total_weight - want.total_weight) > 1e-9 * scale) {
    std::cerr << "verify: total weight " << fmt(got.total_weight) << " vs oracle "
              << fmt(want.total_weight) << "\n";
    return kExitVerifyFailed;
  }
  return kExitOk;
}

int verify_kde(const std::vector<double>& got, const std::vector<double>& want,
               double epsilon) {
  std::size_t bad = 0;
  for (std::size_t q = 0; q < got.size(); ++q) {
    const double err = std::abs(got[q] - want[q]);
    const double budget =
        epsilon > 0.0 ? epsilon : 1e-12 * std::max(1.0, std::abs(want[q]));
    if (err > budget) {
      if (bad < 10) {
        std::cerr << "verify: query " << q << ": density " << fmt(got[q]) << " vs exact "
                  << fmt(want[q]) << " (err " << fmt(err) << ")\n";
      }
      ++bad;
    }
  }
  if (bad) std::cerr << "verify: " << bad << " densities beyond the error budget\n";
  return bad ? kExitVerifyFailed : kExitOk;
}

// ---- run ----

int run_command(const RunConfig& cfg) {
  validate_run_config(cfg);
  const Dataset reference = load_dataset_file(cfg.reference_path);
  const bool self = cfg.query_path.empty() || cfg.query_path == cfg.reference_path;
  const Dataset query = self ? reference : load_dataset_file(cfg.query_path);

  std::ofstream file;
  std::ostream& out = open_output(cfg.output_path, file);
  TraversalStats stats;
  int rc = kExitOk;

  if (cfg.task == "knn" || cfg.task == "kfn") {
    const NeighborMode mode =
        cfg.task == "knn" ? NeighborMode::kNearest : NeighborMode::kFurthest;
    NeighborSearchConfig sc;
    sc.tree = tree_kind(cfg.tree);
    sc.traversal = traversal_kind(cfg.traversal);
    sc.bound = bound_mode(cfg.bound);
    sc.k = cfg.k;
    sc.exclude_self = cfg.exclude_self;
    sc.leaf_size = cfg.leaf_size;
    sc.workers = cfg.workers;
    const NeighborResults res = neighbor_search(query, reference, mode, sc, &stats);
    for (std::uint32_t q = 0; q < res.queries(); ++q) {
      out << q;
      for (std::uint32_t i = 0; i < res.size(q); ++i) {
        out << "," << res.neighbor(q, i) << "," << fmt(res.dist(q, i));
      }
      out << "\n";
    }
    if (cfg.verify) {
      rc = verify_neighbors(res, brute_knn(query, reference, mode, cfg.k,
                                           cfg.exclude_self));
    }
  } else if (cfg.task == "range") {
    const RangeSpec spec{cfg.range_min, cfg.range_max};
    RangeSearchConfig rc2;
    rc2.tree = tree_kind(cfg.tree);
    rc2.traversal = traversal_kind(cfg.traversal);
    rc2.leaf_size = cfg.leaf_size;
    rc2.workers = cfg.workers;
    rc2.unsafe_min_only = cfg.unsafe_range_prune;
    RangeResults res = range_search(query, reference, spec, rc2, &stats);
    for (std::uint32_t q = 0; q < res.rows.size(); ++q) {
      auto& row = res.rows[q];
      std::sort(row.begin(), row.end());
      for (const auto& [r, d] : row) {
        out << q << "," << r << "," << fmt(d) << "\n";
      }
    }
    if (cfg.verify) rc = verify_range(res, brute_range(query, reference, spec));
  } else if (cfg.task == "emst") {
    EmstConfig ec;
    ec.tree = tree_kind(cfg.tree);
    ec.traversal = traversal_kind(cfg.traversal);
    ec.leaf_size = cfg.leaf_size;
    const EmstResult res = emst(reference, ec, &stats);
    for (const Edge& e : res.edges) {
      out << e.u << "," << e.v << "," << fmt(e.weight) << "\n";
    }
    out << "# total_weight=" << fmt(res.total_weight) << "\n";
    if (cfg.verify) rc = verify_emst(res, kruskal_mst(reference));
  } else {  // kde
    const Kernel kernel(kernel_type(cfg.kernel), cfg.bandwidth);
    KdeConfig kc;
    kc.tree = tree_kind(cfg.tree);
    kc.traversal = traversal_kind(cfg.traversal);
    kc.leaf_size = cfg.leaf_size;
    kc.workers = cfg.workers;
    kc.normalize = cfg.normalize;
    const auto densities = kde(query, reference, kernel, cfg.epsilon, kc, &stats);
    for (std::size_t q = 0; q < densities.size(); ++q) {
      out << q << "," << fmt(densities[q]) << "\n";
    }
    if (cfg.verify) {
      auto exact = brute_kde(query, reference, kernel);
      if (cfg.normalize) {
        const double scale =
            static_cast<double>(reference.size()) * kernel.normalizer(reference.dim());
        for (double& f : exact) f /= scale;
        // Normalization rescales the error budget too.
        rc = verify_kde(densities, exact,
                        cfg.epsilon > 0.0 ? cfg.epsilon / scale : 0.0);
      } else {
        rc = verify_kde(densities, exact, cfg.epsilon);
      }
    }
  }
  if (cfg.stats) print_stats(stats);
  return rc;
}

// ---- bench ----

struct BenchConfig {
  RunConfig run;
  int repetitions = 3;
  std::uint64_t seed = 1;
  std::uint32_t generate_n = 0;
  std::uint32_t generate_d = 2;
};

int bench_command(BenchConfig& cfg) {
  Dataset reference = cfg.generate_n > 0
                          ? generate_uniform(cfg.generate_n, cfg.generate_d, cfg.seed)
                          : load_dataset_file(cfg.run.reference_path);
  const bool neighbor_task = cfg.run.task == "knn" || cfg.run.task == "kfn";

  std::vector<RunConfig> variants;
  if (neighbor_task) {
    for (const char* b : {"combined", "b1", "b2"}) {
      RunConfig v = cfg.run;
      v.bound = b;
      variants.push_back(v);
    }
  } else {
    for (const char* tree : {"kd", "cover"}) {
      for (const char* trav : {"dual-dfs", "dual-bfs"}) {
        RunConfig v = cfg.run;
        v.tree = tree;
        v.traversal = trav;
        variants.push_back(v);
      }
    }
  }

  std::cout << "config,base_cases,scores,prunes,wall_ms\n";
  for (const RunConfig& v : variants) {
    TraversalStats stats;
    double best_ms = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      stats = TraversalStats{};
      if (neighbor_task) {
        NeighborSearchConfig sc;
        sc.tree = tree_kind(v.tree);
        sc.traversal = traversal_kind(v.traversal);
        sc.bound = bound_mode(v.bound);
        sc.k = v.k == 0 ? 1 : v.k;
        sc.leaf_size = v.leaf_size;
        sc.workers = v.workers;
        sc.exclude_self = v.exclude_self;
        (void)neighbor_search(reference, reference,
                              v.task == "knn" ? NeighborMode::kNearest
                                              : NeighborMode::kFurthest,
                              sc, &stats);
      } else if (v.task == "range") {
        RangeSearchConfig rc;
        rc.tree = tree_kind(v.tree);
        rc.traversal = traversal_kind(v.traversal);
        rc.leaf_size = v.leaf_size;
        (void)range_search(reference, reference,
                           RangeSpec{v.range_min, v.range_max < 0 ? 0.3 : v.range_max},
                           rc, &stats);
      } else if (v.task == "emst") {
        EmstConfig ec;
        ec.tree = tree_kind(v.tree);
        ec.traversal = traversal_kind(v.traversal);
        ec.leaf_size = v.leaf_size;
        (void)emst(reference, ec, &stats);
      } else {
        KdeConfig kc;
        kc.tree = tree_kind(v.tree);
        kc.traversal = traversal_kind(v.traversal);
        kc.leaf_size = v.leaf_size;
        (void)kde(reference, reference, Kernel(kernel_type(v.kernel), v.bandwidth),
                  v.epsilon < 0 ? 0.01 : v.epsilon, kc, &stats);
      }
      const auto stop = std::chrono::steady_clock::now();
      best_ms = std::min(
          best_ms,
          std::chrono::duration<double, std::milli>(stop - start).count());
    }
    const std::string label = neighbor_task
                                  ? v.task + "-" + v.bound
                                  : v.task + "-" + v.tree + "-" + v.traversal;
    std::cout << label << "," << stats.base_cases << "," << stats.scores << ","
              << stats.prunes << "," << fmt(best_ms) << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree-independent dual-tree algorithms"};
  app.require_subcommand(1);

  RunConfig run_cfg;
  CLI::App* run = app.add_subcommand("run", "run one task and emit its result CSV");
  add_run_options(run, run_cfg);

  BenchConfig bench_cfg;
  CLI::App* bench = app.add_subcommand(
      "bench", "compare bound modes (neighbor tasks) or tree/traversal combinations");
  bench->add_option("--task", bench_cfg.run.task)->required();
  bench->add_option("--reference", bench_cfg.run.reference_path);
  bench->add_option("--k", bench_cfg.run.k);
  bench->add_option("--range-min", bench_cfg.run.range_min);
  bench->add_option("--range-max", bench_cfg.run.range_max);
  bench->add_option("--kernel", bench_cfg.run.kernel);
  bench->add_option("--bandwidth", bench_cfg.run.bandwidth);
  bench->add_option("--epsilon", bench_cfg.run.epsilon);
  bench->add_option("--leaf-size", bench_cfg.run.leaf_size);
  bench->add_option("--workers", bench_cfg.run.workers);
  bench->add_flag("--exclude-self", bench_cfg.run.exclude_self);
  bench->add_option("--repetitions", bench_cfg.repetitions);
  bench->add_option("--seed", bench_cfg.seed);
  bench->add_option("--generate-n", bench_cfg.generate_n,
                    "benchmark on generated uniform data of this size");
  bench->add_option("--generate-d", bench_cfg.generate_d);

  struct {
    std::uint32_t n = 100;
    std::uint32_t d = 2;
    std::uint64_t seed = 1;
    std::uint32_t clusters = 0;
    double sigma = 0.02;
    std::string output = "-";
  } gen_cfg;
  CLI::App* gen = app.add_subcommand("generate", "write a random dataset CSV");
  gen->add_option("--n", gen_cfg.n)->required();
  gen->add_option("--d", gen_cfg.d)->required();
  gen->add_option("--seed", gen_cfg.seed);
  gen->add_option("--clusters", gen_cfg.clusters,
                  "draw points from this many gaussian blobs instead of uniformly");
  gen->add_option("--sigma", gen_cfg.sigma);
  gen->add_option("--output", gen_cfg.output);

  struct {
    std::string reference;
    std::string tree = "kd";
    std::uint32_t leaf_size = 20;
    bool dump = false;
  } val_cfg;
  CLI::App* val = app.add_subcommand("validate-tree", "build a tree and check its invariants");
  val->add_option("--reference", val_cfg.reference)->required();
  val->add_option("--tree", val_cfg.tree)->check(CLI::IsMember({"kd", "cover"}));
  val->add_option("--leaf-size", val_cfg.leaf_size);
  val->add_flag("--dump", val_cfg.dump, "print one line per node");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (run->parsed()) return run_command(run_cfg);
    if (bench->parsed()) {
      if (bench_cfg.generate_n == 0 && bench_cfg.run.reference_path.empty()) {
        throw UsageError("bench needs --reference or --generate-n");
      }
      return bench_command(bench_cfg);
    }
    if (gen->parsed()) {
      const Dataset data =
          gen_cfg.clusters > 0
              ? generate_clusters(gen_cfg.n, gen_cfg.d, gen_cfg.seed, gen_cfg.clusters,
                                  gen_cfg.sigma)
              : generate_uniform(gen_cfg.n, gen_cfg.d, gen_cfg.seed);
      std::ofstream file;
      std::ostream& out = open_output(gen_cfg.output, file);
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto row = data.row(i);
        for (std::size_t d = 0; d < row.size(); ++d) {
          out << (d ? "," : "") << fmt(row[d]);
        }
        out << "\n";
      }
      return kExitOk;
    }
    if (val->parsed()) {
      const Dataset data = load_dataset_file(val_cfg.reference);
      const Tree tree = val_cfg.tree == "cover"
                            ? build_cover_tree(data)
                            : build_kd_tree(data, val_cfg.leaf_size);
      if (val_cfg.dump) std::cout << dump_tree(tree);
      const auto violations = validate_tree(tree, data);
      for (const auto& v : violations) std::cout << v << "\n";
      std::cout << (violations.empty() ? "valid" : "invalid") << "\n";
      return violations.empty() ? kExitOk : 4;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitParseError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParseError;
  }
  return kExitOk;
}
