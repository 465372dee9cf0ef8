#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tidyfit/frame.hpp"
#include "tidyfit/rng.hpp"
#include "tidyfit/types.hpp"

namespace tidyfit {

struct KmeansFit {
  MatrixXd centers;  // k x d
  std::vector<std::int64_t> cluster_sizes;
  std::vector<double> withinss;
  double tot_withinss = 0.0;
  double totss = 0.0;
  double betweenss = 0.0;
  std::vector<int> assignments;  // 1-based
  int iterations = 0;
  std::size_t k = 0, d = 0, n = 0;

  /// tot_withinss of every start, in run order.
  std::vector<double> run_objectives;
  /// tot_withinss after each Lloyd iteration of the selected run.
  std::vector<double> objective_trace;
};

/// Lloyd's algorithm from `nstart` random starts (k distinct rows each);
/// the run with the smallest tot_withinss wins, ties to the earliest run.
KmeansFit fit_kmeans(const MatrixXd& x, int k, int nstart, int max_iter, std::uint64_t seed);

/// One row per cluster: the center coordinates under `dim_names`, size,
/// withinss, cluster ("1".."k").
Frame tidy_kmeans(const KmeansFit& fit, const std::vector<std::string>& dim_names);

/// `frame` with a text ".cluster" column appended.
Frame augment_kmeans(const KmeansFit& fit, const Frame& frame);

/// totss, tot.withinss, betweenss, iter
Frame glance_kmeans(const KmeansFit& fit);

/// Input columns: replication, sd, oracle, .cluster. Output: one row per
/// (replication, sd) with purity = sum over clusters of the majority oracle
/// count divided by the number of points.
Frame cluster_purity(const Frame& assignments);

struct MixtureComponent {
  std::vector<double> center;
  std::size_t size = 0;
  double sd = 1.0;
};

/// Points with independent normal noise around each center. Columns: oracle
/// (1-based component index) then x1..xd.
Frame generate_gaussian_mixture(const std::vector<MixtureComponent>& components, Xoshiro256& rng);

/// Three clusters at (5, -1), (0, 1), (-3, -2) with 100, 150 and 50 points.
/// Columns: oracle, size, x1, x2.
Frame simulation_centers();

/// Inflates `centers` (columns oracle, size, x1, x2) by sd x replication and
/// draws one mixture per combination, each from its own derived stream.
/// Columns: sd, replication, oracle, x1, x2.
Frame simulate_clusters(const Frame& centers, const std::vector<double>& sds, int replications,
                        std::uint64_t seed);

/// Numeric columns of `frame` as an n x d matrix.
MatrixXd frame_matrix(const Frame& frame, const std::vector<std::string>& columns);

}  // namespace tidyfit
