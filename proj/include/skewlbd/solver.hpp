#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "skewlbd/restart.hpp"
#include "skewlbd/ritz.hpp"

namespace skewlbd {

struct SolverConfig {
  int k = 1;                // conjugate pairs requested
  int m = 30;               // maximum subspace dimension
  double tol = 1e-8;        // stopping tolerance
  int max_restarts = 2000;  // implicit restarts before giving up
  Which which = Which::largest;
  std::optional<Vector> q1;  // start vector; defaults to e/||e||_B (largest)
                             // or Ae/||Ae||_B (smallest), e the ones vector
  ReorthPolicy reorth = ReorthPolicy::partial;
  int ml = 30;               // Lanczos steps for the norm estimates
  unsigned seed = 0;         // seeds the fresh-vector fallback only
  bool diagnostics = false;  // record level/theta histories (costly)
  std::ostream* log = nullptr;

  // test/diagnostic hooks; empty by default
  struct ExtractionEvent {
    const LanczosState& state;
    const std::vector<RitzTriplet>& triplets;
    int cycle;
  };
  struct RestartEvent {
    const RestartRotations& rotations;
    BidiagonalFactor factor_before;
    const LanczosState& state;  // after truncation and tracker update
    TruncateInfo info;
    int cycle;
  };
  std::function<void(const ExtractionEvent&)> on_extraction;
  std::function<void(const RestartEvent&)> on_restart;
};

struct StepRecord {
  int cycle = 0;
  int step = 0;
  double theta1 = 0.0;  // largest singular value of G_step
};

struct SolveReport {
  std::vector<EigenPair> pairs;  // populated iff converged
  bool converged = false;
  int restarts = 0;
  std::int64_t mv_count = 0;       // apply_a + solve_b
  std::int64_t apply_b_count = 0;
  std::int64_t reorth_ops = 0;
  double wall_time_s = 0.0;
  Index n = 0;
  int k = 0, m = 0;
  Which which = Which::largest;
  NormEstimates estimates;
  // diagnostics-mode histories
  std::vector<OrthoLevels> level_history;   // one entry per extraction
  std::vector<StepRecord> theta1_history;   // one entry per completed step
};

namespace detail {

inline void validate(const SolverConfig& cfg, Index n) {
  if (cfg.k < 1) throw std::invalid_argument("config: k must be >= 1");
  if (cfg.m <= cfg.k) throw std::invalid_argument("config: m must exceed k");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("config: tol must be positive");
  if (cfg.max_restarts < 1) throw std::invalid_argument("config: max_restarts must be >= 1");
  if (cfg.ml < 1) throw std::invalid_argument("config: ml must be >= 1");
  if (n < 2) throw std::invalid_argument("pencil too small");
  if (2 * static_cast<Index>(cfg.k) > n)
    throw std::invalid_argument("pencil too small for k conjugate pairs");
  if (cfg.q1 && cfg.q1->size() != n) throw std::invalid_argument("config: q1 has wrong dimension");
}

inline Vector default_start(const PencilOperator& pencil, Which which) {
  Vector e = Vector::Ones(pencil.dim());
  if (which == Which::smallest) e = pencil.apply_a(e);
  return e;  // B-normalized by the process initialization
}

}  // namespace detail

/// Implicitly restarted solve for the k extreme conjugate eigenpairs of the
/// pencil behind `pencil`.  Returns eigenpairs only on convergence; a
/// breakdown that captures at least k exact pairs returns them immediately.
inline SolveReport solve(const PencilOperator& pencil, const SolverConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::validate(config, pencil.dim());

  SolveReport report;
  report.n = pencil.dim();
  report.k = config.k;
  report.m = config.m;
  report.which = config.which;

  const std::int64_t a0 = pencil.counters().apply_a.load();
  const std::int64_t b0 = pencil.counters().apply_b.load();
  const std::int64_t s0 = pencil.counters().solve_b.load();

  NormEstimates est = estimate_norms(pencil, config.ml);
  report.estimates = est;

  const int m = std::min<int>(config.m, static_cast<int>(pencil.dim()));
  const int k = config.k;
  Vector q1 = config.q1 ? *config.q1 : detail::default_start(pencil, config.which);
  LanczosState state(pencil, q1, m, est.cond_b, config.reorth);
  std::mt19937 rng(config.seed + 0x9e3779b9u);

  auto finish = [&](bool converged, std::vector<EigenPair> pairs, int cycle) {
    report.converged = converged;
    report.pairs = std::move(pairs);
    report.restarts = cycle;
    report.mv_count = (pencil.counters().apply_a.load() - a0) + (pencil.counters().solve_b.load() - s0);
    report.apply_b_count = pencil.counters().apply_b.load() - b0;
    report.reorth_ops = state.reorth_ops();
    report.estimates.norm_h = state.norm_h();
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
  };

  auto log_step = [&](const char* side, int j) {
    if (!config.log) return;
    OrthoLevels lv = state.measure_levels(true);
    double est = 0.0;
    const auto& trk = state.tracker();
    for (int i = 1; i <= state.steps(); ++i)
      for (int l = 1; l <= state.steps(); ++l) {
        if (i != l) est = std::max(est, std::abs(trk.phi(i, l)));
        est = std::max(est, std::abs(trk.omega(i, l)));
      }
    const bool left = side[0] == 'L';
    (*config.log) << "{\"step\":" << j << ",\"side\":\"" << side << "\""
                  << ",\"" << (left ? "alpha" : "beta") << "\":" << (left ? state.alpha(j) : state.beta(j))
                  << ",\"reorth_ops\":" << state.reorth_ops() << ",\"tracker_max\":" << est
                  << ",\"levels\":[" << lv.pp << "," << lv.qq << "," << lv.pq << "]}\n";
  };

  // selection of the k wanted triplets among n_avail, by which-end
  auto pick = [&](int n_avail) {
    std::vector<int> sel;
    const int kk = std::min(k, n_avail);
    for (int i = 0; i < kk; ++i)
      sel.push_back(config.which == Which::largest ? i : n_avail - kk + i);
    return sel;
  };

  for (int cycle = 0;; ++cycle) {
    // extend the factorization to m steps (from scratch or from k)
    bool terminal = false;            // breakdown ended the process
    bool terminal_left = false;       // ... on the left side
    while (state.steps() < m && !terminal) {
      if (!state.has_pending_left()) {
        auto out = state.left_step();
        if (out.breakdown) {
          const int captured = state.steps();
          if (captured >= k || !state.continue_with_fresh_vector(rng)) {
            terminal = true;
            terminal_left = true;
            break;
          }
        } else {
          log_step("L", out.step);
        }
      }
      if (!terminal && state.has_pending_left()) {
        auto out = state.right_step();
        if (out.breakdown) {
          const int captured = state.steps();
          if (captured >= k || !state.continue_with_fresh_vector(rng)) {
            terminal = true;
            break;
          }
        } else {
          log_step("R", out.step);
        }
      }
      if (config.diagnostics && !state.has_pending_left() && state.steps() > 0)
        report.theta1_history.push_back({cycle, state.steps(), state.factor().largest_singular_value()});
    }

    if (terminal) {
      // exact invariant information captured; every residual is zero
      const int avail = state.steps();
      if (avail == 0) return finish(false, {}, cycle);
      auto triplets = terminal_left ? extract_augmented(state.factor()) : extract(state.factor());
      for (auto& t : triplets) t.residual_norm = 0.0;
      state.set_norm_h(std::max(state.norm_h(), triplets.front().theta));
      if (config.diagnostics) report.level_history.push_back(state.measure_levels());
      if (config.on_extraction) config.on_extraction({state, triplets, cycle});
      auto sel = pick(static_cast<int>(triplets.size()));
      auto pairs = form_eigenpairs(state, triplets, sel);
      return finish(static_cast<int>(sel.size()) == k, std::move(pairs), cycle);
    }

    auto triplets = extract(state.factor());
    state.set_norm_h(triplets.front().theta);
    residual_norms(state, triplets);
    if (config.diagnostics) report.level_history.push_back(state.measure_levels());
    if (config.on_extraction) config.on_extraction({state, triplets, cycle});

    auto conv = check_convergence(triplets, config.which, k, est.norm_b, state.norm_h(), config.tol);
    if (conv.converged) return finish(true, form_eigenpairs(state, triplets, conv.selected), cycle);
    if (cycle >= config.max_restarts) return finish(false, {}, cycle);

    auto shifts = select_shifts(triplets, config.which, k, m);
    auto rotations = bidiag_implicit_qr(state.factor(), shifts);
    BidiagonalFactor before = state.factor();
    TruncateInfo info = truncate(state, rotations, k);
    update_trackers(state.tracker(), rotations, info, m, k);
    if (info.fresh_vector_needed) {
      // the restarted coupling vanished: the wanted subspace is invariant
      state.install_breakdown(Side::right, k);
      if (!state.continue_with_fresh_vector(rng)) {
        auto tr = extract(state.factor());
        for (auto& t : tr) t.residual_norm = 0.0;
        auto sel = pick(static_cast<int>(tr.size()));
        return finish(static_cast<int>(sel.size()) == k, form_eigenpairs(state, tr, sel), cycle + 1);
      }
    }
    if (config.on_restart) config.on_restart({rotations, before, state, info, cycle});
  }
}

}  // namespace skewlbd
