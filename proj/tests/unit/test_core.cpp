#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "doctest.h"
#include "test_util.hpp"
#include "hprobe/core/csv.hpp"
#include "hprobe/core/error.hpp"
#include "hprobe/core/least_squares.hpp"
#include "hprobe/core/optimize.hpp"
#include "hprobe/core/rng.hpp"

using namespace hprobe;
namespace fs = std::filesystem;

static fs::path tmp_dir(const std::string& name) {
  fs::path p = fs::path(HPROBE_TEST_TMP) / "core" / name;
  fs::create_directories(p);
  return p;
}

TEST_CASE("format_double round-trips exactly") {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(g) * std::pow(10.0, static_cast<int>(g() % 40) - 20);
    CHECK(csv::parse_double(csv::format_double(v)) == v);
  }
  CHECK(csv::format_double(0.5) == "0.5");
  CHECK(csv::parse_double(csv::format_double(std::numeric_limits<double>::min())) ==
        std::numeric_limits<double>::min());
}

TEST_CASE("csv table with comments round-trips") {
  const auto path = tmp_dir("csv") / "t.csv";
  csv::Table t;
  t.comments = {"seed=42", "generator test"};
  t.header = {"a", "b"};
  t.rows = {{"1", csv::format_double(0.1)}, {"2", csv::format_double(1e-300)}};
  csv::write(path, t);
  const auto r = csv::read(path);
  CHECK(r.comments == t.comments);
  CHECK(r.header == t.header);
  CHECK(r.rows == t.rows);
  CHECK(csv::column(r, "b")[1] == 1e-300);
  CHECK_THROWS_AS(csv::column(r, "c"), ValidationError);
}

TEST_CASE("csv parse rejects garbage") {
  CHECK_THROWS_AS(csv::parse_double("1.0x"), ValidationError);
  CHECK_THROWS_AS(csv::parse_double(""), ValidationError);
}

TEST_CASE("require_in_range") {
  CHECK_NOTHROW(require_in_range(0.5, 0.0, 1.0, "v"));
  CHECK_THROWS_AS(require_in_range(1.5, 0.0, 1.0, "v"), ValidationError);
  CHECK_THROWS_AS(require_in_range(std::nan(""), 0.0, 1.0, "v"), ValidationError);
}

TEST_CASE("rng streams are order independent") {
  auto a = rng::stream(11, 3, 5);
  auto b0 = rng::stream(11, 4, 5);
  auto b = rng::stream(11, 3, 5);
  (void)b0();
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  auto c = rng::stream(11, 3, 6);
  auto d = rng::stream(11, 3, 5);
  CHECK(c() != d());
}

TEST_CASE("pairwise sum is accurate and fixed-order") {
  std::vector<double> v(100001, 0.1);
  const double s = rng::pairwise_sum(v);
  CHECK(std::abs(s - 10000.1) < 1e-9);
  CHECK(rng::pairwise_sum(v) == s);
  CHECK(rng::pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("golden section finds a parabola vertex") {
  const double x = opt::golden_max([](double t) { return -(t - 0.3) * (t - 0.3); }, -1.0, 2.0, 1e-9);
  CHECK(std::abs(x - 0.3) < 1e-8);
}

TEST_CASE("levenberg-marquardt recovers an exponential") {
  std::vector<double> t(40), y(40);
  for (int i = 0; i < 40; ++i) {
    t[i] = 0.1 * i;
    y[i] = 2.5 * std::exp(-1.3 * t[i]);
  }
  auto fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    r.resize(40);
    jac.resize(40, 2);
    for (int i = 0; i < 40; ++i) {
      const double e = std::exp(-p[1] * t[i]);
      r[i] = p[0] * e - y[i];
      jac(i, 0) = e;
      jac(i, 1) = -p[0] * t[i] * e;
    }
  };
  const auto res = lsq::levenberg_marquardt(fn, Eigen::Vector2d(1.0, 0.5));
  CHECK(res.converged);
  CHECK(res.params[0] == approx(2.5).epsilon(1e-9));
  CHECK(res.params[1] == approx(1.3).epsilon(1e-9));
  CHECK(res.rms_residual < 1e-10);
}
