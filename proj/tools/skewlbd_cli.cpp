// Command-line front end: builds a pencil from files or a generator,
// runs the solver, and writes a JSON report.
// Exit codes: 0 converged, 2 not converged, 1 usage/IO error.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "skewlbd/skewlbd.hpp"

using json = nlohmann::json;
using namespace skewlbd;

namespace {

struct CliOptions {
  std::string matrix_a, matrix_b, matrix_c, gen;
  long n = 0, j = 0;
  double rho = 3.0, delta = 1.0, upsilon = 1.0;
  std::vector<double> upsilons;
  int k = 0, m = 30, max_restarts = 2000, ml = 30;
  double tol = 1e-8;
  std::string which = "largest", reorth = "partial";
  unsigned seed = 0;
  std::string q1_path, out_path, vectors_path;
  bool verbose = false;
};

SparsePencil build_pencil(const CliOptions& opt) {
  if (!opt.gen.empty()) {
    if (opt.gen == "toeplitz") {
      if (opt.n < 2) throw CLI::ValidationError("--gen toeplitz requires --n");
      return SparsePencil(gen_skew_tridiag(opt.n, opt.upsilon), gen_toeplitz_spd(opt.n, opt.rho, opt.delta));
    }
    if (opt.gen == "kron") {
      if (opt.j < 2) throw CLI::ValidationError("--gen kron requires --j");
      std::array<double, 3> ups = {opt.upsilon, opt.upsilon, opt.upsilon};
      if (!opt.upsilons.empty()) {
        if (opt.upsilons.size() != 3) throw CLI::ValidationError("--upsilons needs three values");
        std::copy(opt.upsilons.begin(), opt.upsilons.end(), ups.begin());
      }
      return gen_kron_sum_pencil(opt.j, ups, opt.rho, opt.delta);
    }
    if (opt.gen == "split") {
      if (opt.matrix_c.empty()) throw CLI::ValidationError("--gen split requires --matrix-c");
      return split_pencil(read_matrix_market(opt.matrix_c));
    }
    throw CLI::ValidationError("unknown generator: " + opt.gen);
  }
  if (opt.matrix_a.empty() || opt.matrix_b.empty())
    throw CLI::ValidationError("either --gen or both --matrix-a and --matrix-b are required");
  return SparsePencil(read_matrix_market(opt.matrix_a), read_matrix_market(opt.matrix_b));
}

json report_to_json(const SolveReport& rep, const std::string& vectors_path) {
  json out;
  out["schema"] = 1;
  out["n"] = rep.n;
  out["k"] = rep.k;
  out["m"] = rep.m;
  out["which"] = rep.which == Which::largest ? "largest" : "smallest";
  out["converged"] = rep.converged;
  out["restarts"] = rep.restarts;
  out["mv_count"] = rep.mv_count;
  out["apply_b_count"] = rep.apply_b_count;
  out["reorth_ops"] = rep.reorth_ops;
  out["wall_time_s"] = rep.wall_time_s;
  out["estimates"] = {{"norm_b", rep.estimates.norm_b},
                      {"cond_b", rep.estimates.cond_b},
                      {"norm_h", rep.estimates.norm_h}};
  json pairs = json::array();
  for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
    json p;
    p["theta"] = rep.pairs[i].theta;
    p["residual"] = rep.pairs[i].residual_norm;
    if (!vectors_path.empty()) {
      p["u_ref"] = 2 * i + 1;  // 1-based column in the vectors file
      p["v_ref"] = 2 * i + 2;
    } else {
      p["u_ref"] = nullptr;
      p["v_ref"] = nullptr;
    }
    pairs.push_back(p);
  }
  out["pairs"] = pairs;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterative eigensolver for skew-symmetric/s.p.d. pencils (A, B)"};
  CliOptions opt;

  app.add_option("--matrix-a", opt.matrix_a, "Matrix Market file for A (skew-symmetric)");
  app.add_option("--matrix-b", opt.matrix_b, "Matrix Market file for B (s.p.d.)");
  app.add_option("--gen", opt.gen, "pencil generator: toeplitz | kron | split");
  app.add_option("--n", opt.n, "dimension for --gen toeplitz");
  app.add_option("--j", opt.j, "cube edge for --gen kron (dimension j^3)");
  app.add_option("--rho", opt.rho, "Toeplitz diagonal (default 3)");
  app.add_option("--delta", opt.delta, "Toeplitz off-diagonal (default 1)");
  app.add_option("--upsilon", opt.upsilon, "skew off-diagonal (default 1)");
  app.add_option("--upsilons", opt.upsilons, "three skew couplings for --gen kron")->delimiter(',');
  app.add_option("--matrix-c", opt.matrix_c, "Matrix Market file for --gen split");
  app.add_option("--k", opt.k, "number of conjugate eigenpairs")->required();
  app.add_option("--m", opt.m, "maximum subspace dimension (default 30)");
  app.add_option("--tol", opt.tol, "stopping tolerance (default 1e-8)");
  app.add_option("--which", opt.which, "largest | smallest (default largest)")
      ->check(CLI::IsMember({"largest", "smallest"}));
  app.add_option("--max-restarts", opt.max_restarts, "restart budget (default 2000)");
  app.add_option("--reorth", opt.reorth, "partial | full | none (default partial)")
      ->check(CLI::IsMember({"partial", "full", "none"}));
  app.add_option("--ml", opt.ml, "Lanczos steps for norm estimation (default 30)");
  app.add_option("--seed", opt.seed, "seed for the fresh-vector fallback");
  app.add_option("--q1", opt.q1_path, "Matrix Market vector file with the start vector");
  app.add_option("--out", opt.out_path, "write the JSON report here (default stdout)");
  app.add_option("--vectors", opt.vectors_path, "write eigenvectors to this Matrix Market array file");
  app.add_flag("--verbose", opt.verbose, "per-step structured log on stderr");

  try {
    app.parse(argc, argv);

    SolverConfig cfg;
    cfg.k = opt.k;
    cfg.m = opt.m;
    cfg.tol = opt.tol;
    cfg.max_restarts = opt.max_restarts;
    cfg.which = opt.which == "largest" ? Which::largest : Which::smallest;
    cfg.reorth = opt.reorth == "partial" ? ReorthPolicy::partial
                                         : (opt.reorth == "full" ? ReorthPolicy::full : ReorthPolicy::none);
    cfg.ml = opt.ml;
    cfg.seed = opt.seed;
    if (opt.verbose) cfg.log = &std::cerr;
    if (!opt.q1_path.empty()) cfg.q1 = read_matrix_market_vector(opt.q1_path);

    SparsePencil pencil = build_pencil(opt);
    auto op = pencil.op();
    SolveReport rep = solve(op, cfg);

    if (!opt.vectors_path.empty() && !rep.pairs.empty()) {
      Matrix vecs(rep.n, static_cast<Index>(2 * rep.pairs.size()));
      for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
        vecs.col(static_cast<Index>(2 * i)) = rep.pairs[i].u;
        vecs.col(static_cast<Index>(2 * i + 1)) = rep.pairs[i].v;
      }
      write_matrix_market_array(opt.vectors_path, vecs);
    }

    json out = report_to_json(rep, opt.vectors_path);
    if (opt.out_path.empty()) {
      std::cout << out.dump(2) << "\n";
    } else {
      std::ofstream f(opt.out_path);
      if (!f) throw std::runtime_error("cannot open output file: " + opt.out_path);
      f << out.dump(2) << "\n";
    }
    return rep.converged ? 0 : 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help exits clean; every usage problem is 1
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
