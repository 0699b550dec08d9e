#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "glmtensor/config.hpp"
#include "glmtensor/errors.hpp"
#include "glmtensor/format.hpp"
#include "glmtensor/oracle.hpp"
#include "glmtensor/outputs.hpp"

namespace {

using glmtensor::RunConfig;
using nlohmann::json;

json point_json(const glmtensor::SolveResult& res, const glmtensor::ModelParams& params) {
  json j;
  j["q_x_star"] = res.point.q_x;
  j["q_s_star"] = res.point.q_s;
  j["r_s_star"] = res.point.r_s;
  j["psi"] = res.psi_value;
  j["mmse"] = std::pow(params.rho_x, params.rank) - std::pow(res.point.q_x, params.rank);
  j["converged"] = res.converged;
  j["iterations"] = res.iterations;
  j["branch_id"] = res.branch_id;
  j["near_degenerate"] = res.near_degenerate;
  return j;
}

json phase_points_json(const std::vector<glmtensor::PhasePoint>& points) {
  json rows = json::array();
  for (const auto& p : points) {
    rows.push_back({{"lambda", p.lambda},
                    {"alpha", p.alpha},
                    {"q_x", p.q_x},
                    {"q_s", p.q_s},
                    {"r_s", p.r_s},
                    {"psi", p.psi},
                    {"mmse", p.mmse},
                    {"near_degenerate", p.near_degenerate}});
  }
  return rows;
}

void attach_issues(json& j, const glmtensor::SweepResult& sweep) {
  if (!sweep.errors.empty()) {
    json errs = json::array();
    for (const auto& e : sweep.errors) errs.push_back({{"index", e.index}, {"message", e.message}});
    j["errors"] = errs;
  }
  if (!sweep.warnings.empty()) j["warnings"] = sweep.warnings;
  for (const std::string& w : sweep.warnings) std::cerr << "warning: " << w << "\n";
}

bool wants(const RunConfig& rc, const std::string& fmt) {
  for (const std::string& f : rc.formats)
    if (f == fmt) return true;
  return false;
}

std::string out_path(const RunConfig& rc, const std::string& suffix) {
  return (std::filesystem::path(rc.out_dir) / (rc.basename + suffix)).string();
}

void write_common(const RunConfig& rc) {
  std::filesystem::create_directories(rc.out_dir);
  json echo = rc.resolved;
  echo["config_hash"] = rc.hash;
  glmtensor::write_text_file(out_path(rc, "_config.json"), echo.dump(2) + "\n");
}

void write_json_result(const RunConfig& rc, json payload) {
  payload["config_hash"] = rc.hash;
  glmtensor::write_text_file(out_path(rc, "_result.json"), payload.dump(2) + "\n");
}

int run_command(const RunConfig& rc) {
  using namespace glmtensor;
  write_common(rc);

  if (rc.command == "potential") {
    const ModelParams params = rc.model();
    json j;
    j["point"] = {{"q_x", rc.point.q_x}, {"q_s", rc.point.q_s}, {"r_s", rc.point.r_s}};
    j["psi"] = psi(params, rc.point);
    j["psi_tilde"] = psi_tilde(params.alpha, channel_snr(params, rc.point.q_x), rc.point.r_s,
                               rc.point.q_s, params.prior, params.activation, params.rule);
    write_json_result(rc, j);
    return 0;
  }

  if (rc.command == "solve") {
    const ModelParams params = rc.model();
    const SolveResult res = solve_variational(params, rc.solver);
    write_json_result(rc, point_json(res, params));
    return 0;
  }

  if (rc.command == "sweep-lambda") {
    const ModelParams probe = rc.model();
    const SweepTemplate tmpl = SweepTemplate::from(probe);
    SweepOptions options;
    options.threads = rc.threads;
    options.warm_start = rc.warm_start;
    const SweepResult sweep = sweep_lambda(tmpl, rc.alpha, rc.lambda_values, rc.solver, options);
    if (wants(rc, "csv"))
      write_text_file(out_path(rc, ".csv"), sweep_csv(sweep.points, rc.hash));
    json j;
    j["points"] = phase_points_json(sweep.points);
    attach_issues(j, sweep);
    if (rc.detect_transition) {
      const double threshold =
          rc.jump_threshold > 0.0 ? rc.jump_threshold : default_jump_threshold(probe.rho_x);
      const auto lc = detect_lambda_c(tmpl, rc.alpha, sweep.points, rc.solver, threshold);
      if (lc) {
        j["lambda_c"] = lc->lambda_c;
        j["is_discontinuous"] = lc->is_discontinuous;
      } else {
        j["lambda_c"] = nullptr;
      }
    }
    if (wants(rc, "json")) write_json_result(rc, j);
    if (wants(rc, "svg")) {
      SvgSeries series;
      series.label = "mmse";
      series.color = "#1f77b4";
      for (const auto& p : sweep.points) {
        series.x.push_back(p.lambda);
        series.y.push_back(p.mmse);
      }
      write_text_file(out_path(rc, ".svg"),
                      svg_line_chart({series}, "lambda", "tensor MMSE", "MMSE vs lambda",
                                     rc.hash));
    }
    return 0;
  }

  if (rc.command == "phase-diagram") {
    const ModelParams probe = rc.model();
    const SweepTemplate tmpl = SweepTemplate::from(probe);
    SweepOptions options;
    options.threads = rc.threads;
    const SweepResult sweep =
        sweep_phase_diagram(tmpl, rc.alpha_values, rc.lambda_values, rc.solver, options);
    if (wants(rc, "csv"))
      write_text_file(out_path(rc, ".csv"), sweep_csv(sweep.points, rc.hash));
    json j;
    j["points"] = phase_points_json(sweep.points);
    attach_issues(j, sweep);
    if (wants(rc, "json")) write_json_result(rc, j);
    if (wants(rc, "svg") && sweep.errors.empty()) {
      std::vector<double> values;
      values.reserve(sweep.points.size());
      for (const auto& p : sweep.points) values.push_back(p.mmse);
      write_text_file(out_path(rc, ".svg"),
                      svg_heatmap(values, rc.alpha_values.size(), rc.lambda_values.size(),
                                  rc.alpha_values, rc.lambda_values, "lambda", "alpha",
                                  "tensor MMSE", rc.hash));
    }
    return 0;
  }

  if (rc.command == "limit-curve") {
    const ModelParams probe = rc.model();
    const auto curve = limit_curve(rc.lambda_values, probe.prior, probe.activation, probe.rule);
    if (wants(rc, "csv")) write_text_file(out_path(rc, ".csv"), limit_csv(curve, rc.hash));
    json rows = json::array();
    for (const auto& p : curve)
      rows.push_back({{"lambda", p.lambda}, {"q_x", p.q_x}, {"mmse", p.mmse}});
    if (wants(rc, "json")) {
      json j;
      j["points"] = rows;
      write_json_result(rc, j);
    }
    if (wants(rc, "svg")) {
      SvgSeries series;
      series.label = "mmse (limit)";
      series.color = "#d62728";
      for (const auto& p : curve) {
        series.x.push_back(p.lambda);
        series.y.push_back(p.mmse);
      }
      write_text_file(out_path(rc, ".svg"),
                      svg_line_chart({series}, "lambda", "tensor MMSE",
                                     "MMSE vs lambda (alpha -> 0)", rc.hash));
    }
    return 0;
  }

  if (rc.command == "oracle") {
    const ModelParams params = rc.model();
    const McEstimate mi = mc_mutual_information(params, rc.oracle_n, rc.oracle_p, rc.mi_samples,
                                                rc.seed, rc.threads);
    const McEstimate mmse = mc_tensor_mmse(params, rc.oracle_n, rc.oracle_p, rc.mmse_samples,
                                           rc.seed, rc.threads);
    if (wants(rc, "csv"))
      write_text_file(out_path(rc, ".csv"),
                      oracle_csv(rc.lambda, rc.oracle_n, rc.oracle_p, mi, mmse, rc.hash));
    json j;
    j["lambda"] = rc.lambda;
    j["n"] = rc.oracle_n;
    j["p"] = rc.oracle_p;
    j["mi_est"] = mi.estimate;
    j["mi_se"] = mi.std_error;
    j["mi_samples"] = mi.n_samples;
    j["mmse_est"] = mmse.estimate;
    j["mmse_se"] = mmse.std_error;
    j["mmse_samples"] = mmse.n_samples;
    if (wants(rc, "json")) write_json_result(rc, j);
    return 0;
  }

  if (rc.command == "immse-check") {
    const ModelParams params = rc.model();
    const ImmseReport rep = immse_check(params, rc.oracle_n, rc.oracle_p, rc.mi_samples,
                                        rc.dlambda, rc.seed, rc.threads);
    json j;
    j["lambda"] = rep.lambda;
    j["dlambda"] = rep.dlambda;
    j["n"] = rep.n;
    j["p"] = rep.p;
    j["di_dlambda"] = rep.di_dlambda;
    j["di_dlambda_se"] = rep.di_dlambda_se;
    j["mmse_scaled"] = rep.mmse_scaled;
    j["mmse_scaled_se"] = rep.mmse_scaled_se;
    j["combined_se"] = rep.combined_se;
    j["slack"] = rep.slack;
    j["pass"] = rep.pass;
    write_json_result(rc, j);
    return rep.pass ? 0 : 3;
  }

  throw glmtensor::config_error("unhandled command " + rc.command);
}

void emit_error(const std::string& type, const std::string& message) {
  json err;
  err["error"] = {{"type", type}, {"message", message}};
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational solver and finite-size oracle for spiked tensor models with a "
               "generalized-linear spike"};
  app.require_subcommand(1);

  std::string config_path;
  glmtensor::CliOverrides ov;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file; flags override its values");
    cmd->add_option("--prior", ov.prior_kind, "gaussian | two_point | finite_support");
    cmd->add_option("--mean", ov.prior_mean, "Gaussian prior mean");
    cmd->add_option("--variance", ov.prior_variance, "Gaussian prior variance");
    cmd->add_option("--v-plus", ov.v_plus, "two_point: positive support value");
    cmd->add_option("--v-minus", ov.v_minus, "two_point: negative support value");
    cmd->add_option("--p-plus", ov.p_plus, "two_point: probability of v_plus");
    cmd->add_option("--activation", ov.activation_kind, "linear | sign | sign_deadzone");
    cmd->add_option("--epsilon", ov.epsilon, "sign_deadzone half-width");
    cmd->add_option("--rank", ov.rank, "tensor order r >= 2");
    cmd->add_option("--lambda", ov.lambda_value, "SNR");
    cmd->add_option("--alpha", ov.alpha_value, "n/p ratio");
    cmd->add_option("--quad-order", ov.quad_order, "Gauss-Hermite order (default 41)");
    cmd->add_option("--out-dir", ov.out_dir, "output directory");
    cmd->add_option("--basename", ov.basename, "output file basename");
    cmd->add_option("--formats", ov.formats, "output formats: csv json svg");
    cmd->add_option("--threads", ov.threads, "worker threads (0 = auto)");
    cmd->add_option("--seed", ov.seed, "RNG seed for oracle commands");
  };

  CLI::App* c_potential = app.add_subcommand("potential", "evaluate the potential at a point");
  c_potential->add_option("--qx", ov.q_x, "q_x coordinate");
  c_potential->add_option("--qs", ov.q_s, "q_s coordinate");
  c_potential->add_option("--rs", ov.r_s, "r_s coordinate");
  CLI::App* c_solve = app.add_subcommand("solve", "solve the variational problem");
  CLI::App* c_sweep = app.add_subcommand("sweep-lambda", "solve along a lambda grid");
  CLI::App* c_phase = app.add_subcommand("phase-diagram", "solve over a (lambda, alpha) grid");
  CLI::App* c_limit = app.add_subcommand("limit-curve", "alpha -> 0 curve along a lambda grid");
  CLI::App* c_oracle = app.add_subcommand("oracle", "finite-size Monte-Carlo estimates");
  CLI::App* c_immse = app.add_subcommand("immse-check", "finite-size I-MMSE consistency check");

  for (CLI::App* cmd : {c_potential, c_solve, c_sweep, c_phase, c_limit, c_oracle, c_immse})
    add_common(cmd);
  for (CLI::App* cmd : {c_sweep, c_phase, c_limit}) {
    cmd->add_option("--lambda-min", ov.lambda_min, "lambda grid start");
    cmd->add_option("--lambda-max", ov.lambda_max, "lambda grid end");
    cmd->add_option("--lambda-count", ov.lambda_count, "lambda grid size");
  }
  bool detect_flag = false, warm_flag = false;
  c_sweep->add_flag("--detect-lambda-c", detect_flag, "locate and classify the transition");
  c_sweep->add_flag("--warm-start", warm_flag, "seed each solve with the previous point");
  CLI::Option* on = nullptr;
  for (CLI::App* cmd : {c_oracle, c_immse}) {
    on = cmd->add_option("--n", ov.oracle_n, "spike dimension n (<= 64)");
    (void)on;
    cmd->add_option("--p", ov.oracle_p, "latent dimension p (<= 20)");
    cmd->add_option("--samples", ov.samples, "Monte-Carlo sample count");
  }
  c_immse->add_option("--dlambda", ov.dlambda, "central-difference step in lambda");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    emit_error("config", e.what());
    return 2;
  }
  if (detect_flag) ov.detect_transition = true;
  if (warm_flag) ov.warm_start = true;

  try {
    nlohmann::json file_config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw glmtensor::config_error("cannot open config file " + config_path);
      try {
        in >> file_config;
      } catch (const nlohmann::json::parse_error& e) {
        throw glmtensor::config_error(std::string("config file is not valid JSON: ") + e.what());
      }
    }
    const std::string command = app.get_subcommands().front()->get_name();
    const RunConfig rc = glmtensor::resolve_config(file_config, command, ov);
    return run_command(rc);
  } catch (const glmtensor::config_error& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const glmtensor::solver_error& e) {
    emit_error("solver", e.what());
    return 3;
  } catch (const glmtensor::numeric_error& e) {
    emit_error("numeric", e.what());
    return 4;
  } catch (const glmtensor::invalid_argument& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
}
