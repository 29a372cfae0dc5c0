#include <sstream>

#include "doctest.h"
#include "involute/error.hpp"
#include "involute/metrics.hpp"

using namespace involute;

TEST_CASE("violation metric") {
  const Matrix a{{-1}};
  const auto grid = uniform_grid_1d(-3, 3, 200);
  const Evaluator even = [](std::span<const double> x) { return x[0] * x[0]; };
  const Evaluator lin = [](std::span<const double> x) { return x[0] + 1.0; };
  CHECK(violation_metric(even, grid, a, 1) == 0.0);
  // (x+1) − (−x+1) = 2x, mean of 4x² on the grid
  double oracle = 0.0;
  for (const auto& p : grid) oracle += 4.0 * p[0] * p[0];
  CHECK(violation_metric(lin, grid, a, 1) == doctest::Approx(oracle / 200.0).epsilon(1e-14));
  // (x+1) + (−x+1) = 2
  CHECK(violation_metric(lin, grid, a, -1) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK_THROWS(violation_metric(even, std::vector<Vector>{}, a, 1));
}

TEST_CASE("uniform grid") {
  const auto g = uniform_grid_1d(-3, 3, 200);
  CHECK(g.size() == 200);
  CHECK(g.front()[0] == -3.0);
  CHECK(g.back()[0] == 3.0);
  for (const auto& p : g) CHECK(p[0] != 0.0);
  CHECK(uniform_grid_1d(0, 2, 1)[0][0] == 1.0);
}

TEST_CASE("flip violation") {
  const std::vector<int> xs{1, 2, 3, 4};
  const std::function<std::size_t(const int&)> parity = [](const int& x) { return static_cast<std::size_t>(x % 2); };
  const std::function<int(const int&)> plus1 = [](const int& x) { return x + 1; };
  const std::function<int(const int&)> same = [](const int& x) { return x; };
  CHECK(flip_violation<int>(parity, xs, plus1) == 1.0);
  CHECK(flip_violation<int>(parity, xs, same) == 0.0);
  CHECK(flip_axis_from_string("vertical") == FlipAxis::vertical);
  CHECK_THROWS_AS(flip_axis_from_string("diagonal"), ConfigError);
}

TEST_CASE("run-record CSV round trip") {
  const std::vector<RunRecord> recs{{1, 0.5, 0.0, 10, 1.25}, {2, 0.1 + 0.2, 1e-300, 20, 0.0}};
  std::stringstream ss;
  write_csv(recs, ss);
  const std::string text = ss.str();
  CHECK(text.rfind("epoch,train_loss,violation,trunk_evals,wall_ms\n", 0) == 0);
  const auto back = read_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[1].train_loss == 0.1 + 0.2);
  CHECK(back[1].violation == 1e-300);
  CHECK(back[1].trunk_evals == 20);
  CHECK(back[0].wall_ms == 1.25);

  std::stringstream out;
  CHECK_THROWS(write_csv(std::vector<RunRecord>{}, out));
  CHECK_THROWS(write_csv(std::vector<RunRecord>{{2, 0, 0, 0, 0}, {2, 0, 0, 0, 0}}, out));
  std::istringstream bad("epoch,loss\n1,2\n");
  CHECK_THROWS_AS(read_csv(bad), FormatError);
  std::istringstream short_row("epoch,train_loss,violation,trunk_evals,wall_ms\n1,2\n");
  CHECK_THROWS_AS(read_csv(short_row), FormatError);
}
