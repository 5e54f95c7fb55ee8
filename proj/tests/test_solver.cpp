#include <catch2/catch.hpp>

#include <cstring>
#include <thread>

#include "test_util.hpp"

using namespace skewlbd;
using testutil::sparse_identity;

TEST_CASE("largest pairs of the Toeplitz pencil match the dense oracle") {
  const Index n = 200;
  SpMatrix a = gen_skew_tridiag(n, 1.0);
  SpMatrix b = gen_toeplitz_spd(n, 3.0, 1.0);
  SparsePencil p(a, b);
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 3;
  cfg.tol = 1e-10;
  auto rep = solve(op, cfg);
  REQUIRE(rep.converged);
  REQUIRE(rep.pairs.size() == 3);

  auto spec = dense_pencil_spectrum(Matrix(a), Matrix(b));
  const double threshold = std::sqrt(rep.estimates.norm_b) * rep.estimates.norm_h * cfg.tol;
  for (int j = 0; j < 3; ++j) {
    CHECK(rep.pairs[j].theta ==
          Approx(spec.sigmas[static_cast<std::size_t>(j)]).epsilon(1e-10));
    CHECK(rep.pairs[j].residual_norm <= threshold);
    CHECK(direct_residual(op, rep.pairs[j]) <= threshold);
  }
  CHECK(rep.restarts > 0);
  CHECK(rep.mv_count > 0);
}

TEST_CASE("breakdown path returns the exact spectrum of S_4 and S_6") {
  {
    SparsePencil p(gen_skew_tridiag(4, 1.0), sparse_identity(4));
    auto op = p.op();
    SolverConfig cfg;
    cfg.k = 2;
    cfg.m = 30;
    auto rep = solve(op, cfg);
    REQUIRE(rep.converged);
    REQUIRE(rep.pairs.size() == 2);
    CHECK(rep.pairs[0].theta == Approx(2.0 * std::cos(M_PI / 5.0)).epsilon(1e-12));
    CHECK(rep.pairs[1].theta == Approx(2.0 * std::cos(2.0 * M_PI / 5.0)).epsilon(1e-12));
    CHECK(rep.pairs[0].residual_norm == 0.0);
  }
  {
    SparsePencil p(gen_skew_tridiag(6, 1.0), sparse_identity(6));
    auto op = p.op();
    SolverConfig cfg;
    cfg.k = 3;
    cfg.m = 30;
    auto rep = solve(op, cfg);
    REQUIRE(rep.converged);
    REQUIRE(rep.pairs.size() == 3);
    for (int j = 0; j < 3; ++j)
      CHECK(rep.pairs[static_cast<std::size_t>(j)].theta ==
            Approx(2.0 * std::cos((j + 1) * M_PI / 7.0)).epsilon(1e-12));
  }
}

TEST_CASE("smallest pairs of the Toeplitz pencil match the dense oracle") {
  const Index n = 100;
  SpMatrix a = gen_skew_tridiag(n, 1.0);
  SpMatrix b = gen_toeplitz_spd(n, 3.0, 1.0);
  SparsePencil p(a, b);
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 2;
  cfg.which = Which::smallest;
  cfg.tol = 1e-9;
  auto rep = solve(op, cfg);
  REQUIRE(rep.converged);
  REQUIRE(rep.pairs.size() == 2);

  auto spec = dense_pencil_spectrum(Matrix(a), Matrix(b));
  const std::size_t l = spec.sigmas.size();
  // report lists the selected triplets in descending theta order
  CHECK(rep.pairs[0].theta == Approx(spec.sigmas[l - 2]).epsilon(1e-8));
  CHECK(rep.pairs[1].theta == Approx(spec.sigmas[l - 1]).epsilon(1e-8));
}

TEST_CASE("kron-sum pencil solve agrees with the dense oracle") {
  SparsePencil p = gen_kron_sum_pencil(8, {0.4, 0.5, 0.6}, 3.0, 1.0);
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 5;
  cfg.tol = 1e-10;
  auto rep = solve(op, cfg);
  REQUIRE(rep.converged);
  auto spec = dense_pencil_spectrum(Matrix(p.a()), Matrix(p.b()));
  for (int j = 0; j < 5; ++j)
    CHECK(rep.pairs[static_cast<std::size_t>(j)].theta ==
          Approx(spec.sigmas[static_cast<std::size_t>(j)]).epsilon(1e-9));
}

TEST_CASE("partial and full reorthogonalization agree; partial does less work") {
  const Index n = 200;
  SparsePencil p(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0));
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 3;
  cfg.tol = 1e-10;
  cfg.reorth = ReorthPolicy::partial;
  auto rep_partial = solve(op, cfg);
  cfg.reorth = ReorthPolicy::full;
  auto rep_full = solve(op, cfg);
  REQUIRE(rep_partial.converged);
  REQUIRE(rep_full.converged);
  for (int j = 0; j < 3; ++j)
    CHECK(rep_partial.pairs[static_cast<std::size_t>(j)].theta ==
          Approx(rep_full.pairs[static_cast<std::size_t>(j)].theta).epsilon(1e-12));
  CHECK(rep_partial.reorth_ops < rep_full.reorth_ops);
}

TEST_CASE("matrix-vector accounting is exact") {
  const Index n = 200;
  SparsePencil p(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0));
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 3;
  cfg.tol = 1e-10;
  auto rep = solve(op, cfg);
  REQUIRE(rep.converged);
  // two apply_a and two solve_b per full step, plus the estimation overhead
  const std::int64_t steps = rep.m + static_cast<std::int64_t>(rep.restarts) * (rep.m - rep.k);
  CHECK(rep.mv_count == 4 * steps + rep.estimates.steps_binv);
}

TEST_CASE("per-step counter deltas") {
  const Index n = 50;
  SparsePencil p(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0));
  auto op = p.op();
  LanczosState s(op, Vector::Ones(n), 10);
  auto a0 = op.counters().apply_a.load();
  auto s0 = op.counters().solve_b.load();
  s.left_step();
  CHECK(op.counters().apply_a.load() == a0 + 1);
  CHECK(op.counters().solve_b.load() == s0 + 1);
  s.right_step();
  CHECK(op.counters().apply_a.load() == a0 + 2);
  CHECK(op.counters().solve_b.load() == s0 + 2);
}

TEST_CASE("reports are deterministic across repeated runs") {
  const Index n = 150;
  SparsePencil p(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0));
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 2;
  cfg.tol = 1e-10;
  auto r1 = solve(op, cfg);
  auto r2 = solve(op, cfg);
  REQUIRE(r1.pairs.size() == r2.pairs.size());
  for (std::size_t j = 0; j < r1.pairs.size(); ++j) {
    CHECK(std::memcmp(&r1.pairs[j].theta, &r2.pairs[j].theta, sizeof(double)) == 0);
    CHECK(std::memcmp(&r1.pairs[j].residual_norm, &r2.pairs[j].residual_norm, sizeof(double)) == 0);
  }
  CHECK(r1.mv_count == r2.mv_count);
  CHECK(r1.reorth_ops == r2.reorth_ops);
  CHECK(r1.restarts == r2.restarts);
}

TEST_CASE("default start vectors match their explicit forms") {
  const Index n = 80;
  SparsePencil p(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0));
  auto op = p.op();

  SolverConfig cfg;
  cfg.k = 2;
  cfg.tol = 1e-10;
  auto rep_default = solve(op, cfg);
  cfg.q1 = Vector::Ones(n);
  auto rep_explicit = solve(op, cfg);
  REQUIRE(rep_default.converged);
  for (std::size_t j = 0; j < 2; ++j)
    CHECK(rep_default.pairs[j].theta == rep_explicit.pairs[j].theta);

  SolverConfig cfg_s;
  cfg_s.k = 2;
  cfg_s.which = Which::smallest;
  cfg_s.tol = 1e-9;
  auto rep_s = solve(op, cfg_s);
  cfg_s.q1 = Vector(p.a() * Vector::Ones(n));
  auto rep_s2 = solve(op, cfg_s);
  REQUIRE(rep_s.converged);
  for (std::size_t j = 0; j < 2; ++j) CHECK(rep_s.pairs[j].theta == rep_s2.pairs[j].theta);
}

TEST_CASE("invalid configurations are rejected") {
  SparsePencil p(gen_skew_tridiag(10, 1.0), sparse_identity(10));
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 0;
  CHECK_THROWS_AS(solve(op, cfg), std::invalid_argument);
  cfg.k = 5;
  cfg.m = 5;
  CHECK_THROWS_AS(solve(op, cfg), std::invalid_argument);
  cfg.m = 30;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(solve(op, cfg), std::invalid_argument);
  cfg.tol = 1e-8;
  cfg.k = 6;  // 2k > n
  CHECK_THROWS_AS(solve(op, cfg), std::invalid_argument);
  cfg.k = 2;
  cfg.q1 = Vector::Ones(9);
  CHECK_THROWS_AS(solve(op, cfg), std::invalid_argument);
}

TEST_CASE("restart budget exhaustion reports non-convergence") {
  const Index n = 200;
  SparsePencil p(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0));
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 3;
  cfg.tol = 1e-10;
  cfg.max_restarts = 1;
  auto rep = solve(op, cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.pairs.empty());
  CHECK(rep.restarts == 1);
}

TEST_CASE("concurrent solves on one shared pencil") {
  const Index n = 150;
  SparsePencil p(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0));
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 2;
  cfg.tol = 1e-10;
  auto baseline = solve(op, cfg);
  REQUIRE(baseline.converged);

  // one operator handle per thread: the pencil (and its factorization) is
  // shared read-only, the counters are per-handle
  auto op1 = p.op();
  auto op2 = p.op();
  SolveReport r1, r2;
  std::thread t1([&] { r1 = solve(op1, cfg); });
  std::thread t2([&] { r2 = solve(op2, cfg); });
  t1.join();
  t2.join();
  REQUIRE(r1.converged);
  REQUIRE(r2.converged);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(r1.pairs[j].theta == baseline.pairs[j].theta);
    CHECK(r2.pairs[j].theta == baseline.pairs[j].theta);
  }
  CHECK(r1.mv_count == baseline.mv_count);
  CHECK(r2.mv_count == baseline.mv_count);
}

TEST_CASE("diagnostics mode records level and theta histories") {
  const Index n = 120;
  SparsePencil p(gen_skew_tridiag(n, 1.0), gen_toeplitz_spd(n, 3.0, 1.0));
  auto op = p.op();
  SolverConfig cfg;
  cfg.k = 2;
  cfg.tol = 1e-10;
  cfg.diagnostics = true;
  auto rep = solve(op, cfg);
  REQUIRE(rep.converged);
  CHECK_FALSE(rep.level_history.empty());
  CHECK_FALSE(rep.theta1_history.empty());
  const double bound = 8.0 * std::sqrt(kEps / rep.m);
  for (const auto& lv : rep.level_history) CHECK(lv.max() <= bound);
  // theta_1 never decreases within an expansion
  for (std::size_t i = 1; i < rep.theta1_history.size(); ++i) {
    const auto& prev = rep.theta1_history[i - 1];
    const auto& cur = rep.theta1_history[i];
    if (prev.cycle == cur.cycle)
      CHECK(cur.theta1 >= prev.theta1 - 1e-13 * rep.theta1_history.back().theta1);
  }
}
