#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "tidyfit/kmeans.hpp"

using namespace tidyfit;

namespace {

MatrixXd random_points(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> normal;
  MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(gen) + 4.0 * static_cast<double>(gen() % 3);
  return x;
}

Frame mixture(std::uint64_t seed, double sd) {
  Xoshiro256 rng(seed);
  return generate_gaussian_mixture(
      {{{5.0, -1.0}, 100, sd}, {{0.0, 1.0}, 150, sd}, {{-3.0, -2.0}, 50, sd}}, rng);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("k equal to n puts every point at its own center") {
  MatrixXd x(5, 2);
  x << 0, 0, 1, 0, 0, 1, 5, 5, -2, 3;
  const KmeansFit fit = fit_kmeans(x, 5, 3, 50, 1);
  CHECK(fit.tot_withinss == 0.0);
  CHECK(fit.betweenss == doctest::Approx(fit.totss));
  for (auto s : fit.cluster_sizes) CHECK(s == 1);
}

TEST_CASE("k equal to one gives the column means") {
  MatrixXd x(4, 2);
  x << 1, 2, 3, 4, 1, 4, 3, 2;
  const KmeansFit fit = fit_kmeans(x, 1, 2, 10, 7);
  CHECK(fit.centers(0, 0) == doctest::Approx(2.0));
  CHECK(fit.centers(0, 1) == doctest::Approx(3.0));
  CHECK(fit.tot_withinss == doctest::Approx(fit.totss));
  CHECK(std::abs(fit.betweenss) < 1e-12);

  const Frame t = tidy_kmeans(fit, {"x1", "x2"});
  CHECK(t.names() == std::vector<std::string>{"x1", "x2", "size", "withinss", "cluster"});
  CHECK(t.n_rows() == 1);
  CHECK(t.column("x1").as_doubles()[0] == doctest::Approx(2.0));
  CHECK(t.column("x2").as_doubles()[0] == doctest::Approx(3.0));
  CHECK_THROWS_AS(tidy_kmeans(fit, {"x1"}), Error);

  const Frame g = glance_kmeans(fit);
  CHECK(g.names() == std::vector<std::string>{"totss", "tot.withinss", "betweenss", "iter"});
  CHECK(g.column("tot.withinss").as_doubles()[0] == doctest::Approx(g.column("totss").as_doubles()[0]));
}

TEST_CASE("invalid k") {
  MatrixXd x(3, 1);
  x << 1, 2, 3;
  CHECK_THROWS_AS(fit_kmeans(x, 4, 1, 10, 1), Error);
  CHECK_THROWS_AS(fit_kmeans(x, 0, 1, 10, 1), Error);
  CHECK_THROWS_AS(fit_kmeans(x, -1, 1, 10, 1), Error);
}

TEST_CASE("augment appends text cluster labels matching the assignments") {
  const Frame data = mixture(3, 1.0);
  const MatrixXd x = frame_matrix(data, {"x1", "x2"});
  const KmeansFit fit = fit_kmeans(x, 3, 5, 100, 11);
  const Frame a = augment_kmeans(fit, data);
  CHECK(a.names() == std::vector<std::string>{"oracle", "x1", "x2", ".cluster"});
  const auto& labels = a.column(".cluster").values<std::string>();
  for (std::size_t i = 0; i < labels.size(); ++i) CHECK(labels[i] == std::to_string(fit.assignments[i]));
  CHECK_THROWS_AS(augment_kmeans(fit, data.take(std::vector<std::size_t>{0, 1})), Error);

  const KmeansFit one = fit_kmeans(x, 1, 1, 10, 1);
  for (const auto& l : augment_kmeans(one, data).column(".cluster").values<std::string>()) CHECK(l == "1");

  const Frame t = tidy_kmeans(fit, {"x1", "x2"});
  CHECK(t.n_rows() == 3);
  const auto& sizes = t.column("size").values<std::int64_t>();
  CHECK(sizes[0] + sizes[1] + sizes[2] == 300);
}

TEST_CASE("augment recombines across an inflated k grid") {
  const Frame data = mixture(4, 1.0);
  const std::vector<GridEntry> grid{{"k", {Value{std::int64_t{1}}, Value{std::int64_t{2}}, Value{std::int64_t{3}}}}};
  const Frame out = apply_combine(inflate(data, grid), [](const Frame& g, std::size_t i) {
    const int k = static_cast<int>(g.column("k").values<std::int64_t>()[0]);
    const KmeansFit fit = fit_kmeans(frame_matrix(g, {"x1", "x2"}), k, 5, 100, 100 + i);
    return augment_kmeans(fit, g.select(std::vector<std::string>{"oracle", "x1", "x2"}));
  });
  CHECK(out.names() == std::vector<std::string>{"k", "oracle", "x1", "x2", ".cluster"});
  CHECK(out.n_rows() == 900);
}

TEST_CASE("purity") {
  const Frame data = mixture(5, 1.0);
  const auto& oracle = data.column("oracle").values<std::int64_t>();
  std::vector<std::string> perfect, single;
  for (auto o : oracle) {
    perfect.push_back(std::to_string(o));
    single.push_back("1");
  }
  const auto frame_with = [&](std::vector<std::string> labels) {
    return Frame({Column::integers("replication", std::vector<std::int64_t>(300, 1)),
                  Column::floats("sd", std::vector<double>(300, 1.0)), data.column("oracle"),
                  Column::texts(".cluster", std::move(labels))});
  };
  CHECK(cluster_purity(frame_with(perfect)).column("purity").as_doubles()[0] == 1.0);
  CHECK(cluster_purity(frame_with(single)).column("purity").as_doubles()[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(cluster_purity(data), Error);
}

TEST_CASE("centers are recovered at sd 1") {
  const double truth[3][2] = {{5, -1}, {0, 1}, {-3, -2}};
  std::vector<double> worst;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Frame data = mixture(1000 + seed, 1.0);
    const KmeansFit fit = fit_kmeans(frame_matrix(data, {"x1", "x2"}), 3, 5, 100, seed);
    double w = 0.0;
    for (const auto& t : truth) {
      double best = INFINITY;
      for (Eigen::Index c = 0; c < 3; ++c)
        best = std::min(best, std::max(std::abs(fit.centers(c, 0) - t[0]), std::abs(fit.centers(c, 1) - t[1])));
      w = std::max(w, best);
    }
    worst.push_back(w);
  }
  CHECK(median(worst) < 0.3);
}

TEST_CASE("property: Lloyd invariants") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 150; ++trial) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(gen() % 60);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(gen() % 4);
    const int k = 1 + static_cast<int>(gen() % std::min<Eigen::Index>(n, 6));
    const int nstart = 1 + static_cast<int>(gen() % 5);
    const MatrixXd x = random_points(gen, n, d);
    const KmeansFit fit = fit_kmeans(x, k, nstart, 100, gen());

    for (std::size_t s = 1; s < fit.objective_trace.size(); ++s)
      CHECK(fit.objective_trace[s] <= fit.objective_trace[s - 1] * (1.0 + 1e-12));
    REQUIRE(fit.run_objectives.size() == static_cast<std::size_t>(nstart));
    CHECK(fit.tot_withinss == *std::min_element(fit.run_objectives.begin(), fit.run_objectives.end()));

    std::int64_t total = 0;
    for (auto s : fit.cluster_sizes) total += s;
    CHECK(total == n);
    double within = 0.0;
    for (double w : fit.withinss) within += w;
    CHECK(within == doctest::Approx(fit.tot_withinss).epsilon(1e-8));
    CHECK(fit.betweenss >= -1e-8 * std::max(1.0, fit.totss));
    CHECK(std::abs(fit.totss - fit.tot_withinss - fit.betweenss) <= 1e-8 * std::max(1.0, fit.totss));

    // totss recomputed from scratch
    const Eigen::RowVectorXd mean = x.colwise().mean();
    CHECK(fit.totss == doctest::Approx((x.rowwise() - mean).squaredNorm()).epsilon(1e-10));

    if (fit.iterations < 100) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double own = (x.row(i) - fit.centers.row(fit.assignments[static_cast<std::size_t>(i)] - 1)).squaredNorm();
        for (int c = 0; c < k; ++c) CHECK(own <= (x.row(i) - fit.centers.row(c)).squaredNorm() * (1.0 + 1e-12) + 1e-12);
      }
    }
  }
}

TEST_CASE("same seed, same fit") {
  std::mt19937_64 gen(8);
  const MatrixXd x = random_points(gen, 40, 2);
  const KmeansFit a = fit_kmeans(x, 3, 5, 100, 99), b = fit_kmeans(x, 3, 5, 100, 99);
  CHECK(a.assignments == b.assignments);
  CHECK(a.centers == b.centers);
}

TEST_CASE("simulation grid has the expected shape") {
  const Frame sim = simulate_clusters(simulation_centers(), {0.5, 1, 2, 4}, 2, 2014);
  CHECK(sim.names() == std::vector<std::string>{"sd", "replication", "oracle", "x1", "x2"});
  CHECK(sim.n_rows() == 4 * 2 * 300);
  CHECK(sim == simulate_clusters(simulation_centers(), {0.5, 1, 2, 4}, 2, 2014));
}
