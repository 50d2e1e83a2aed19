#include "hoifkit/basis.hpp"
#include "hoifkit/condvar.hpp"
#include "hoifkit/gram.hpp"
#include "hoifkit/hoif.hpp"
#include "hoifkit/rng.hpp"

#include <benchmark/benchmark.h>

using namespace hoifkit;

namespace {

struct Problem {
  Eigen::VectorXd a, y;
  Eigen::MatrixXd Z;
};

Problem make_problem(long n, int k, Family family = Family::fourier) {
  Engine eng = make_engine(1, 0, "bench");
  Problem p;
  Eigen::MatrixXd X(n, 1);
  p.a.resize(n);
  p.y.resize(n);
  for (long i = 0; i < n; ++i) X(i, 0) = uniform01(eng), p.a[i] = standard_normal(eng), p.y[i] = standard_normal(eng);
  p.Z = BasisDict::make(family, k).eval(X);
  return p;
}

UStatOptions with(VarianceMode m) {
  UStatOptions o;
  o.variance = m;
  return o;
}

void BM_If22Estimate(benchmark::State& st) {
  const Problem p = make_problem(st.range(0), static_cast<int>(st.range(1)));
  const GramOperator g = GramOperator::identity(static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(if22(p.a, p.y, p.Z, g, with(VarianceMode::none)).estimate);
  st.SetComplexityN(st.range(0) * st.range(1));
}
BENCHMARK(BM_If22Estimate)->Args({1000, 50})->Args({10000, 100})->Args({100000, 1000})->Unit(benchmark::kMillisecond);

// exact variance: n x n kernel for small n, cross moments otherwise
void BM_If22ExactVariance(benchmark::State& st) {
  const Problem p = make_problem(st.range(0), static_cast<int>(st.range(1)));
  const GramOperator g = GramOperator::identity(static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(if22(p.a, p.y, p.Z, g, with(VarianceMode::exact)).se);
}
BENCHMARK(BM_If22ExactVariance)->Args({500, 200})->Args({2000, 40})->Args({5000, 100})->Unit(benchmark::kMillisecond);

void BM_If22IncompleteVariance(benchmark::State& st) {
  const Problem p = make_problem(st.range(0), static_cast<int>(st.range(1)));
  const GramOperator g = GramOperator::identity(static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(if22(p.a, p.y, p.Z, g, with(VarianceMode::incomplete)).se);
}
BENCHMARK(BM_If22IncompleteVariance)->Args({100000, 1000})->Unit(benchmark::kMillisecond);

void BM_If22Naive(benchmark::State& st) {
  const Problem p = make_problem(st.range(0), static_cast<int>(st.range(1)));
  const GramOperator g = GramOperator::identity(static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(if22_naive(p.a, p.y, p.Z, g));
}
BENCHMARK(BM_If22Naive)->Args({1000, 50})->Args({4000, 50})->Unit(benchmark::kMillisecond);

// dense Gram: whitening is O(n k^2)
void BM_If22DenseGram(benchmark::State& st) {
  const int k = static_cast<int>(st.range(1));
  const Problem p = make_problem(st.range(0), k, Family::bspline);
  const GramOperator g = exact_gram(BasisDict::make(Family::bspline, k), Density::uniform(1));
  for (auto _ : st) benchmark::DoNotOptimize(if22(p.a, p.y, p.Z, g, with(VarianceMode::none)).estimate);
}
BENCHMARK(BM_If22DenseGram)->Args({10000, 100})->Args({10000, 400})->Unit(benchmark::kMillisecond);

void BM_If22To33(benchmark::State& st) {
  const int k = static_cast<int>(st.range(1));
  const Problem p = make_problem(st.range(0), k);
  const Problem train = make_problem(st.range(0), k);
  const GramOperator g = empirical_gram(train.Z, "train");
  for (auto _ : st) benchmark::DoNotOptimize(if22_to_33(p.a, p.y, p.Z, g, with(VarianceMode::none)).estimate);
}
BENCHMARK(BM_If22To33)->Args({2000, 40})->Args({10000, 200})->Unit(benchmark::kMillisecond);

void BM_ExactGram(benchmark::State& st) {
  const BasisDict b = BasisDict::make(Family::legendre, static_cast<int>(st.range(0)));
  GramOptions o;
  o.allow_analytic = false;
  for (auto _ : st) benchmark::DoNotOptimize(exact_gram(b, Density::uniform(1), o).size());
}
BENCHMARK(BM_ExactGram)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Subcube(benchmark::State& st) {
  const long n = st.range(0);
  Engine eng = make_engine(2, 0, "bench");
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd Y(n);
  for (long i = 0; i < n; ++i) X(i, 0) = uniform01(eng), Y[i] = standard_normal(eng);
  const SubcubePlan plan = optimal_subcube_plan(n, 1, 0.3);
  for (auto _ : st) {
    Engine e = make_engine(3, 0, "pairs");
    benchmark::DoNotOptimize(subcube_variance(X, Y, plan, e).sigma2_hat);
  }
}
BENCHMARK(BM_Subcube)->Arg(16000)->Arg(1000000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
