#include "tidyfit/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace tidyfit {

namespace {

struct Run {
  MatrixXd centers;
  std::vector<int> assignment;  // 0-based
  int iterations = 0;
  double objective = 0.0;
  std::vector<double> trace;
};

std::vector<int> assign_nearest(const MatrixXd& x, const MatrixXd& centers) {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
      const double d = (x.row(i) - centers.row(c)).squaredNorm();
      if (d < best) {  // strict: ties keep the lowest index
        best = d;
        best_k = static_cast<int>(c);
      }
    }
    out[static_cast<std::size_t>(i)] = best_k;
  }
  return out;
}

std::vector<double> cluster_withinss(const MatrixXd& x, const MatrixXd& centers, const std::vector<int>& a) {
  std::vector<double> out(static_cast<std::size_t>(centers.rows()), 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = a[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(c)] += (x.row(i) - centers.row(c)).squaredNorm();
  }
  return out;
}

double objective(const MatrixXd& x, const MatrixXd& centers, const std::vector<int>& a) {
  const auto w = cluster_withinss(x, centers, a);
  return std::accumulate(w.begin(), w.end(), 0.0);
}

/// Cluster means; an empty cluster is reseeded at the point farthest from its
/// own center.
void update_centers(const MatrixXd& x, const std::vector<int>& a, MatrixXd& centers) {
  const auto k = centers.rows();
  MatrixXd sums = MatrixXd::Zero(k, x.cols());
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    sums.row(a[static_cast<std::size_t>(i)]) += x.row(i);
    ++counts[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
  }
  std::vector<double> own_distance;
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      continue;
    }
    if (own_distance.empty()) {
      own_distance.resize(static_cast<std::size_t>(x.rows()));
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        own_distance[static_cast<std::size_t>(i)] =
            (x.row(i) - centers.row(a[static_cast<std::size_t>(i)])).squaredNorm();
    }
    const auto far = std::max_element(own_distance.begin(), own_distance.end()) - own_distance.begin();
    centers.row(c) = x.row(far);
    own_distance[static_cast<std::size_t>(far)] = -1.0;
  }
}

Run lloyd(const MatrixXd& x, int k, int max_iter, Xoshiro256& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Run run;
  run.centers.resize(k, x.cols());
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
    std::swap(order[i], order[j]);
    run.centers.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(order[i]));
  }

  run.assignment = assign_nearest(x, run.centers);
  while (run.iterations < max_iter) {
    update_centers(x, run.assignment, run.centers);
    ++run.iterations;
    run.trace.push_back(objective(x, run.centers, run.assignment));
    auto next = assign_nearest(x, run.centers);
    if (next == run.assignment) break;
    run.assignment = std::move(next);
    if (run.iterations == max_iter) update_centers(x, run.assignment, run.centers);
  }
  run.objective = objective(x, run.centers, run.assignment);
  return run;
}

}  // namespace

KmeansFit fit_kmeans(const MatrixXd& x, int k, int nstart, int max_iter, std::uint64_t seed) {
  const auto n = x.rows();
  if (k <= 0) throw Error(ErrorKind::Argument, "k must be positive");
  if (k > n) throw Error(ErrorKind::Argument, "k (" + std::to_string(k) + ") exceeds the number of points (" +
                                                  std::to_string(n) + ")");
  if (nstart < 1) throw Error(ErrorKind::Argument, "nstart must be at least 1");
  if (max_iter < 1) throw Error(ErrorKind::Argument, "max_iter must be at least 1");
  if (!x.allFinite()) throw Error(ErrorKind::Argument, "k-means input contains non-finite values");

  Xoshiro256 rng(seed);
  KmeansFit fit;
  Run best;
  for (int s = 0; s < nstart; ++s) {
    Run run = lloyd(x, k, max_iter, rng);
    fit.run_objectives.push_back(run.objective);
    if (s == 0 || run.objective < best.objective) best = std::move(run);
  }

  fit.k = static_cast<std::size_t>(k);
  fit.d = static_cast<std::size_t>(x.cols());
  fit.n = static_cast<std::size_t>(n);
  fit.centers = best.centers;
  fit.iterations = best.iterations;
  fit.objective_trace = std::move(best.trace);
  fit.cluster_sizes.assign(fit.k, 0);
  fit.withinss = cluster_withinss(x, fit.centers, best.assignment);
  fit.assignments.resize(fit.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = best.assignment[static_cast<std::size_t>(i)];
    ++fit.cluster_sizes[static_cast<std::size_t>(c)];
    fit.assignments[static_cast<std::size_t>(i)] = c + 1;
  }
  fit.tot_withinss = std::accumulate(fit.withinss.begin(), fit.withinss.end(), 0.0);
  const Eigen::RowVectorXd grand = x.colwise().mean();
  fit.totss = (x.rowwise() - grand).squaredNorm();
  fit.betweenss = fit.totss - fit.tot_withinss;
  return fit;
}

Frame tidy_kmeans(const KmeansFit& fit, const std::vector<std::string>& dim_names) {
  if (dim_names.size() != fit.d)
    throw Error(ErrorKind::Argument, "expected " + std::to_string(fit.d) + " dimension names, got " +
                                         std::to_string(dim_names.size()));
  std::vector<Column> cols;
  for (std::size_t j = 0; j < fit.d; ++j) {
    const VectorXd c = fit.centers.col(static_cast<Eigen::Index>(j));
    cols.push_back(Column::floats(dim_names[j], {c.data(), c.data() + c.size()}));
  }
  std::vector<std::string> labels;
  for (std::size_t c = 1; c <= fit.k; ++c) labels.push_back(std::to_string(c));
  cols.push_back(Column::integers("size", fit.cluster_sizes));
  cols.push_back(Column::floats("withinss", fit.withinss));
  cols.push_back(Column::texts("cluster", std::move(labels)));
  return Frame(std::move(cols));
}

Frame augment_kmeans(const KmeansFit& fit, const Frame& frame) {
  if (frame.n_rows() != fit.n)
    throw Error(ErrorKind::Argument, "frame has " + std::to_string(frame.n_rows()) +
                                         " rows but the clustering used " + std::to_string(fit.n));
  std::vector<std::string> labels;
  labels.reserve(fit.n);
  for (int a : fit.assignments) labels.push_back(std::to_string(a));
  return frame.append({Column::texts(".cluster", std::move(labels))});
}

Frame glance_kmeans(const KmeansFit& fit) {
  return Frame({Column::floats("totss", {fit.totss}), Column::floats("tot.withinss", {fit.tot_withinss}),
                Column::floats("betweenss", {fit.betweenss}),
                Column::integers("iter", {static_cast<std::int64_t>(fit.iterations)})});
}

Frame cluster_purity(const Frame& assignments) {
  for (const char* name : {"replication", "sd", "oracle", ".cluster"})
    if (!assignments.has_column(name))
      throw Error(ErrorKind::Schema, std::string("cluster_purity needs column '") + name + "'");

  const std::vector<AggregateSpec> count_spec{{"n", "", Reducer::count()}};
  const Frame counts = aggregate(group_by(assignments, {"replication", "sd", ".cluster", "oracle"}), count_spec);

  const std::vector<AggregateSpec> per_cluster{{"correct", "n", Reducer::max()}, {"total", "n", Reducer::sum()}};
  const Frame clusters = aggregate(group_by(counts, {"replication", "sd", ".cluster"}), per_cluster);

  const std::vector<AggregateSpec> per_run{{"correct", "correct", Reducer::sum()}, {"total", "total", Reducer::sum()}};
  const Frame runs = aggregate(group_by(clusters, {"replication", "sd"}), per_run);

  const auto& correct = runs.column("correct").values<double>();
  const auto& total = runs.column("total").values<double>();
  std::vector<double> purity(correct.size());
  for (std::size_t i = 0; i < purity.size(); ++i) purity[i] = correct[i] / total[i];
  const std::vector<std::string> keep{"replication", "sd"};
  return runs.select(keep).append({Column::floats("purity", std::move(purity))});
}

Frame generate_gaussian_mixture(const std::vector<MixtureComponent>& components, Xoshiro256& rng) {
  if (components.empty()) throw Error(ErrorKind::Argument, "mixture needs at least one component");
  const std::size_t d = components.front().center.size();
  std::vector<std::int64_t> oracle;
  std::vector<std::vector<double>> coords(d);
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto& comp = components[c];
    if (comp.center.size() != d) throw Error(ErrorKind::Argument, "mixture centers differ in dimension");
    if (!(comp.sd >= 0.0)) throw Error(ErrorKind::Argument, "mixture sd must be non-negative");
    for (std::size_t i = 0; i < comp.size; ++i) {
      oracle.push_back(static_cast<std::int64_t>(c + 1));
      for (std::size_t j = 0; j < d; ++j) coords[j].push_back(comp.center[j] + comp.sd * rng.normal());
    }
  }
  std::vector<Column> cols{Column::integers("oracle", std::move(oracle))};
  for (std::size_t j = 0; j < d; ++j) cols.push_back(Column::floats("x" + std::to_string(j + 1), std::move(coords[j])));
  return Frame(std::move(cols));
}

Frame simulation_centers() {
  return Frame({Column::integers("oracle", {1, 2, 3}), Column::integers("size", {100, 150, 50}),
                Column::floats("x1", {5.0, 0.0, -3.0}), Column::floats("x2", {-1.0, 1.0, -2.0})});
}

Frame simulate_clusters(const Frame& centers, const std::vector<double>& sds, int replications,
                        std::uint64_t seed) {
  if (sds.empty()) throw Error(ErrorKind::Argument, "at least one sd is required");
  if (replications < 1) throw Error(ErrorKind::Argument, "replications must be at least 1");
  std::vector<Value> sd_values(sds.begin(), sds.end());
  std::vector<Value> rep_values;
  for (int r = 1; r <= replications; ++r) rep_values.emplace_back(static_cast<std::int64_t>(r));
  const std::vector<GridEntry> grid{{"sd", sd_values}, {"replication", rep_values}};

  return apply_combine(inflate(centers, grid), [seed](const Frame& g, std::size_t index) {
    const auto sd = g.column("sd").as_doubles();
    const auto size = g.column("size").as_doubles();
    const MatrixXd xy = frame_matrix(g, {"x1", "x2"});
    std::vector<MixtureComponent> components;
    for (std::size_t c = 0; c < g.n_rows(); ++c) {
      const auto i = static_cast<Eigen::Index>(c);
      components.push_back({{xy(i, 0), xy(i, 1)}, static_cast<std::size_t>(size[c]), sd[c]});
    }
    Xoshiro256 rng(derive_seed(seed, index));
    return generate_gaussian_mixture(components, rng);
  });
}

MatrixXd frame_matrix(const Frame& frame, const std::vector<std::string>& columns) {
  MatrixXd out(static_cast<Eigen::Index>(frame.n_rows()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto v = frame.column(columns[j]).as_doubles();
    out.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return out;
}

}  // namespace tidyfit
