// fsk - factor score predictor toolkit.
//
// Subcommands: validate, transform, pipeline, predictors, verify, simulate.
// All take a model JSON file and emit a JSON document (or CSV where
// documented) to stdout or --out.
//
// Exit codes: 0 success, 1 validation/verification failure, 2 I/O or parse
// failure, 3 numerical failure (Heywood case, singular matrix,
// non-convergence).

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fsk/fsk.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

// Perfect-correlation precondition threshold for `verify` (Phi = I and a
// diagonal Lambda' Sigma^{-1} Lambda). Fixed rather than tied to --tol so
// that the report's "met / not met" judgment is stable while --tol still
// governs how much correlation deviation is accepted.
constexpr double kPreconditionTol = 1e-8;

struct RunConfig {
  std::string command;
  std::string model_path;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  long long n_samples = 200000;
  std::string out_path;
  std::string format = "json";
};

int env_threads() {
  const char* v = std::getenv("FSK_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  return std::max(0, std::atoi(v));
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out_path, std::ios::binary);
  if (!out) {
    throw fsk::ParseError("cannot open output file: " + cfg.out_path);
  }
  out << text;
}

int cmd_validate(const RunConfig& cfg) {
  fsk::FactorModeld m;
  try {
    m = fsk::load_model_file(cfg.model_path);
    const auto diag = fsk::validate(m, cfg.tol);
    emit(cfg, fsk::document_validate(diag, ""));
    return kExitOk;
  } catch (const fsk::InvalidModel& e) {
    emit(cfg, fsk::document_validate(std::nullopt, e.what()));
    return kExitValidation;
  }
}

int cmd_transform(const RunConfig& cfg) {
  const fsk::FactorModeld m = fsk::load_model_file(cfg.model_path);
  fsk::validate(m, cfg.tol);
  const auto tm = fsk::transform_loadings(m, cfg.tol);

  const fsk::SymMatrixd sigma = fsk::sigma_from_model(m);
  const fsk::SymMatrixd sigma_inv = fsk::safe_inverse(sigma, cfg.tol);
  const fsk::Matrix<double> gram =
      m.lambda.transpose() * sigma_inv.m() * m.lambda;
  const fsk::Matrix<double> gram_star =
      tm.lambda_star.transpose() * sigma_inv.m() * tm.lambda_star;
  const fsk::Matrix<double> gram_star_raw =
      tm.lambda_star_raw.transpose() * sigma_inv.m() * tm.lambda_star_raw;
  const double eq13_offdiag = fsk::offdiag_max(gram_star);
  const double eq13_diag =
      (gram_star_raw.diagonal() - gram.diagonal()).cwiseAbs().maxCoeff();
  const double sigma_res = fsk::max_abs_diff(
      fsk::Matrix<double>(tm.lambda_star * tm.phi_star.m() *
                          tm.lambda_star.transpose()),
      fsk::Matrix<double>(m.lambda * m.phi.m() * m.lambda.transpose()));

  emit(cfg, fsk::document_transform(tm, eq13_offdiag, eq13_diag, sigma_res));
  return kExitOk;
}

int cmd_pipeline(const RunConfig& cfg) {
  const fsk::FactorModeld m = fsk::load_model_file(cfg.model_path);
  const auto report = fsk::run_pipeline(m, cfg.tol);
  emit(cfg, fsk::document_pipeline(report, m.p()));
  const bool numerical_warning =
      std::any_of(report.warnings.begin(), report.warnings.end(),
                  [](const std::string& s) {
                    return s == "HEYWOOD" || s == "NOT_CONVERGED";
                  });
  return numerical_warning ? kExitNumerical : kExitOk;
}

int cmd_predictors(const RunConfig& cfg) {
  using PK = fsk::PredictorKind;
  const fsk::FactorModeld m = fsk::load_model_file(cfg.model_path);
  fsk::validate(m, cfg.tol);

  fsk::PredictorsDocument doc;
  doc.p = m.p();
  doc.q = m.q();
  fsk::PredictorDoc* slots[] = {&doc.bl, &doc.blcu, &doc.dblcp};
  for (int i = 0; i < 3; ++i) {
    const PK kind = fsk::kAllPredictorKinds[i];
    slots[i]->weights = fsk::weights(m, kind, cfg.tol).w;
    slots[i]->covariance = fsk::predictor_covariance(m, kind, cfg.tol).m();
    slots[i]->validity = fsk::factor_validity(m, kind, cfg.tol);
  }
  doc.r_blcu_bl = fsk::cross_correlation(m, PK::BLCU, PK::BL, cfg.tol);
  doc.r_dblcp_bl = fsk::cross_correlation(m, PK::DBLCP, PK::BL, cfg.tol);
  doc.r_blcu_dblcp = fsk::cross_correlation(m, PK::BLCU, PK::DBLCP, cfg.tol);

  if (cfg.format == "csv") {
    // One weight matrix per file; --out is the path prefix.
    if (cfg.out_path.empty()) {
      throw fsk::ParseError("predictors --format csv requires --out PREFIX");
    }
    const std::pair<const char*, const fsk::Matrix<double>*> files[] = {
        {"_bl.csv", &doc.bl.weights},
        {"_blcu.csv", &doc.blcu.weights},
        {"_dblcp.csv", &doc.dblcp.weights}};
    for (const auto& [suffix, mat] : files) {
      const std::string path = cfg.out_path + suffix;
      std::ofstream out(path, std::ios::binary);
      if (!out) throw fsk::ParseError("cannot open output file: " + path);
      fsk::write_matrix_csv(out, *mat);
    }
    return kExitOk;
  }
  emit(cfg, fsk::document_predictors(doc));
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
  using PK = fsk::PredictorKind;
  const fsk::FactorModeld m = fsk::load_model_file(cfg.model_path);
  fsk::validate(m, cfg.tol);

  const fsk::SymMatrixd sigma = fsk::sigma_from_model(m);
  const fsk::SymMatrixd sigma_inv = fsk::safe_inverse(sigma, cfg.tol);

  fsk::VerifyDocument doc;
  doc.phi_identity_residual = fsk::max_abs_diff(
      m.phi.m(), fsk::Matrix<double>::Identity(m.q(), m.q()));
  doc.gram_offdiag_residual = fsk::offdiag_max(
      fsk::Matrix<double>(m.lambda.transpose() * sigma_inv.m() * m.lambda));
  doc.precondition_met = doc.phi_identity_residual < kPreconditionTol &&
                         doc.gram_offdiag_residual < kPreconditionTol;

  doc.r_blcu_bl = fsk::cross_correlation(m, PK::BLCU, PK::BL, cfg.tol);
  doc.r_dblcp_bl = fsk::cross_correlation(m, PK::DBLCP, PK::BL, cfg.tol);
  doc.r_blcu_dblcp = fsk::cross_correlation(m, PK::BLCU, PK::DBLCP, cfg.tol);
  const fsk::Matrix<double> eye =
      fsk::Matrix<double>::Identity(m.q(), m.q());
  doc.max_deviation_from_identity =
      std::max({fsk::max_abs_diff(doc.r_blcu_bl, eye),
                fsk::max_abs_diff(doc.r_dblcp_bl, eye),
                fsk::max_abs_diff(doc.r_blcu_dblcp, eye)});

  int exit_code = kExitOk;
  if (!doc.precondition_met) {
    doc.status = "precondition_not_met";
  } else if (doc.max_deviation_from_identity < cfg.tol) {
    doc.status = "ok";
  } else {
    doc.status = "deviation_exceeds_tol";
    exit_code = kExitValidation;
  }
  emit(cfg, fsk::document_verify(doc));
  return exit_code;
}

int cmd_simulate(const RunConfig& cfg) {
  using PK = fsk::PredictorKind;
  const fsk::FactorModeld m = fsk::load_model_file(cfg.model_path);
  fsk::validate(m, cfg.tol);
  const auto s =
      fsk::sample(m, fsk::Index(cfg.n_samples), cfg.seed, env_threads(), cfg.tol);

  if (cfg.format == "csv") {
    if (cfg.out_path.empty()) {
      fsk::write_samples_csv(std::cout, s);
    } else {
      std::ofstream out(cfg.out_path, std::ios::binary);
      if (!out)
        throw fsk::ParseError("cannot open output file: " + cfg.out_path);
      fsk::write_samples_csv(out, s);
    }
    return kExitOk;
  }

  fsk::SimulateDocument doc;
  doc.n = cfg.n_samples;
  doc.seed = static_cast<long long>(cfg.seed);
  const std::pair<PK, PK> pairs[] = {
      {PK::BLCU, PK::BL}, {PK::DBLCP, PK::BL}, {PK::BLCU, PK::DBLCP}};
  double worst = 0;
  for (const auto& [a, b] : pairs) {
    fsk::SimulatePair pr;
    pr.a = fsk::to_string(a);
    pr.b = fsk::to_string(b);
    pr.empirical = fsk::empirical_predictor_correlations(s, m, a, b, cfg.tol);
    pr.closed_form = fsk::cross_correlation(m, a, b, cfg.tol);
    pr.max_abs_diff = fsk::max_abs_diff(pr.empirical, pr.closed_form);
    worst = std::max(worst, pr.max_abs_diff);
    doc.pairs.push_back(std::move(pr));
  }
  for (const PK kind : fsk::kAllPredictorKinds) {
    fsk::SimulateValidity v;
    v.kind = fsk::to_string(kind);
    v.empirical = fsk::empirical_validity(s, m, kind, cfg.tol);
    v.closed_form = fsk::factor_validity(m, kind, cfg.tol);
    v.max_abs_diff = fsk::max_abs_diff(v.empirical, v.closed_form);
    worst = std::max(worst, v.max_abs_diff);
    doc.validities.push_back(std::move(v));
  }
  doc.max_abs_discrepancy = worst;
  emit(cfg, fsk::document_simulate(doc));
  return kExitOk;
}

int dispatch(const RunConfig& cfg) {
  try {
    if (cfg.command == "validate") return cmd_validate(cfg);
    if (cfg.command == "transform") return cmd_transform(cfg);
    if (cfg.command == "pipeline") return cmd_pipeline(cfg);
    if (cfg.command == "predictors") return cmd_predictors(cfg);
    if (cfg.command == "verify") return cmd_verify(cfg);
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    std::cerr << "unknown command: " << cfg.command << "\n";
    return kExitIo;
  } catch (const fsk::InvalidModel& e) {
    // Error documents go to stdout unconditionally; --out may be what failed.
    std::cout << fsk::document_error(cfg.command, "invalid_model", e.what());
    return kExitValidation;
  } catch (const fsk::ParseError& e) {
    std::cout << fsk::document_error(cfg.command, "parse", e.what());
    return kExitIo;
  } catch (const fsk::Error& e) {
    // Heywood, singular, non-convergence, integrity: all numerical.
    std::cout << fsk::document_error(cfg.command, "numerical", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factor score predictor toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  const std::pair<const char*, const char*> commands[] = {
      {"validate", "check model invariants and print diagnostics"},
      {"transform", "apply the diagonalizing loading transformation"},
      {"pipeline", "full transform + Schmid-Leiman pipeline report"},
      {"predictors", "weight matrices, covariances, correlations, validities"},
      {"verify", "check the perfect-correlation condition on a model"},
      {"simulate", "compare sample-based correlations with closed forms"}};
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--model", cfg.model_path, "model JSON file")->required();
    sub->add_option("--tol", cfg.tol, "numerical tolerance (default 1e-10)");
    sub->add_option("--seed", cfg.seed, "RNG seed (default 0)");
    sub->add_option("--n-samples", cfg.n_samples,
                    "sample count for simulate (default 200000)");
    sub->add_option("--out", cfg.out_path, "output path (default stdout)");
    sub->add_option("--format", cfg.format, "json or csv (default json)")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->callback([&cfg, name = std::string(name)] { cfg.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitIo;
  }

  if (cfg.n_samples < 2) {
    std::cerr << "--n-samples must be at least 2\n";
    return kExitIo;
  }
  return dispatch(cfg);
}
