#include "glmtensor/config.hpp"

#include <cstdlib>
#include <set>

#include "glmtensor/format.hpp"

namespace glmtensor {

namespace {

using nlohmann::json;

const std::set<std::string> kCommands = {"potential",   "solve",       "sweep-lambda",
                                         "phase-diagram", "limit-curve", "oracle",
                                         "immse-check"};

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  if (!obj.is_object()) throw config_error(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!known.count(key)) throw config_error("unknown key \"" + key + "\" in " + where);
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw config_error(where + " needs \"" + key + "\"");
  if (!obj.at(key).is_number()) throw config_error(where + "." + key + " must be a number");
  return obj.at(key).get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback,
                 const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) throw config_error(where + "." + key + " must be a number");
  return obj.at(key).get<double>();
}

Prior parse_prior(const json& spec, const CliOverrides& ov) {
  json merged = spec.is_null() ? json::object() : spec;
  if (ov.prior_kind) merged["kind"] = *ov.prior_kind;
  if (ov.prior_mean) merged["mean"] = *ov.prior_mean;
  if (ov.prior_variance) merged["variance"] = *ov.prior_variance;
  if (ov.v_plus) merged["v_plus"] = *ov.v_plus;
  if (ov.v_minus) merged["v_minus"] = *ov.v_minus;
  if (ov.p_plus) merged["p_plus"] = *ov.p_plus;
  if (!merged.contains("kind")) merged["kind"] = "gaussian";
  const std::string kind = merged.at("kind").get<std::string>();

  if (kind == "gaussian") {
    reject_unknown_keys(merged, {"kind", "mean", "variance"}, "model.prior");
    return Prior::gaussian(number_or(merged, "mean", 0.0, "model.prior"),
                           number_or(merged, "variance", 1.0, "model.prior"));
  }
  if (kind == "two_point") {
    reject_unknown_keys(merged, {"kind", "v_plus", "v_minus", "p_plus"}, "model.prior");
    return Prior::two_point(number_or(merged, "v_plus", 1.0, "model.prior"),
                            number_or(merged, "v_minus", -1.0, "model.prior"),
                            number_or(merged, "p_plus", 0.5, "model.prior"));
  }
  if (kind == "finite_support") {
    reject_unknown_keys(merged, {"kind", "values", "probabilities"}, "model.prior");
    if (!merged.contains("values") || !merged.contains("probabilities"))
      throw config_error("finite_support prior needs \"values\" and \"probabilities\"");
    return Prior::finite_support(merged.at("values").get<std::vector<double>>(),
                                 merged.at("probabilities").get<std::vector<double>>());
  }
  throw config_error("unknown prior kind \"" + kind +
                     "\" (expected gaussian, two_point or finite_support)");
}

Activation parse_activation(const json& spec, const CliOverrides& ov) {
  json merged = spec.is_null() ? json::object() : spec;
  if (ov.activation_kind) merged["kind"] = *ov.activation_kind;
  if (ov.epsilon) merged["epsilon"] = *ov.epsilon;
  if (!merged.contains("kind")) merged["kind"] = "linear";
  const std::string kind = merged.at("kind").get<std::string>();

  if (kind == "linear") {
    reject_unknown_keys(merged, {"kind"}, "model.activation");
    return Activation::linear();
  }
  if (kind == "sign") {
    reject_unknown_keys(merged, {"kind"}, "model.activation");
    return Activation::sign();
  }
  if (kind == "sign_deadzone") {
    reject_unknown_keys(merged, {"kind", "epsilon"}, "model.activation");
    return Activation::sign_deadzone(require_number(merged, "epsilon", "model.activation"));
  }
  throw config_error("unknown activation kind \"" + kind +
                     "\" (expected linear, sign or sign_deadzone)");
}

std::vector<double> parse_grid(const json& spec, const std::string& where) {
  if (spec.is_array()) {
    const auto values = spec.get<std::vector<double>>();
    if (values.empty()) throw config_error(where + " must not be empty");
    for (std::size_t i = 1; i < values.size(); ++i)
      if (!(values[i] > values[i - 1]))
        throw config_error(where + " must be strictly increasing");
    return values;
  }
  if (spec.is_object()) {
    reject_unknown_keys(spec, {"min", "max", "count"}, where);
    const double lo = require_number(spec, "min", where);
    const double hi = require_number(spec, "max", where);
    const int count = static_cast<int>(require_number(spec, "count", where));
    if (count < 1 || !(hi >= lo)) throw config_error(where + ": need count >= 1 and max >= min");
    std::vector<double> values(count);
    for (int i = 0; i < count; ++i)
      values[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1.0);
    return values;
  }
  throw config_error(where + " must be an array or a {min, max, count} object");
}

json prior_echo(const Prior& p) {
  json j;
  switch (p.kind) {
    case PriorKind::Gaussian:
      j["kind"] = "gaussian";
      j["mean"] = p.mean;
      j["variance"] = p.variance;
      break;
    case PriorKind::TwoPoint:
      j["kind"] = "two_point";
      j["v_plus"] = p.values[0];
      j["v_minus"] = p.values[1];
      j["p_plus"] = p.probabilities[0];
      break;
    case PriorKind::FiniteSupport:
      j["kind"] = "finite_support";
      j["values"] = p.values;
      j["probabilities"] = p.probabilities;
      break;
  }
  return j;
}

json activation_echo(const Activation& a) {
  json j;
  switch (a.kind) {
    case ActivationKind::Linear:
      j["kind"] = "linear";
      break;
    case ActivationKind::Sign:
      j["kind"] = "sign";
      break;
    case ActivationKind::SignDeadzone:
      j["kind"] = "sign_deadzone";
      j["epsilon"] = a.epsilon;
      break;
    case ActivationKind::Custom:
      j["kind"] = "custom";
      break;
  }
  return j;
}

}  // namespace

int env_thread_default() {
  const char* env = std::getenv("GLMTENSOR_THREADS");
  if (!env) return 0;
  const int v = std::atoi(env);
  return v > 0 ? v : 0;
}

ModelParams RunConfig::model() const {
  return ModelParams::make(lambda, alpha, rank, prior, activation, quad_order);
}

RunConfig resolve_config(const json& file_config, const std::string& command,
                         const CliOverrides& ov) {
  if (!kCommands.count(command))
    throw config_error("unknown command \"" + command + "\"");
  json root = file_config.is_null() ? json::object() : file_config;
  reject_unknown_keys(root,
                      {"command", "model", "solver", "grid", "oracle", "output", "threads"},
                      "config");
  if (root.contains("command") && root.at("command").get<std::string>() != command)
    throw config_error("config file command \"" + root.at("command").get<std::string>() +
                       "\" does not match the invoked command \"" + command + "\"");

  RunConfig rc;
  rc.command = command;

  const json model = root.value("model", json::object());
  reject_unknown_keys(model,
                      {"prior", "activation", "rank", "lambda", "alpha", "quad_order"},
                      "model");
  rc.prior = parse_prior(model.value("prior", json()), ov);
  rc.activation = parse_activation(model.value("activation", json()), ov);
  rc.rank = ov.rank ? *ov.rank : static_cast<int>(number_or(model, "rank", 3, "model"));
  rc.lambda = ov.lambda_value ? *ov.lambda_value : number_or(model, "lambda", 1.0, "model");
  rc.alpha = ov.alpha_value ? *ov.alpha_value : number_or(model, "alpha", 1.0, "model");
  rc.quad_order = ov.quad_order ? *ov.quad_order
                                : static_cast<int>(number_or(model, "quad_order",
                                                             kDefaultQuadOrder, "model"));
  if (rc.rank < 2) throw config_error("model.rank must be >= 2");
  if (!(rc.lambda >= 0.0)) throw config_error("model.lambda must be >= 0");
  if (!(rc.alpha > 0.0)) throw config_error("model.alpha must be > 0");
  if (rc.quad_order < 1 || rc.quad_order > 256)
    throw config_error("model.quad_order must be in [1, 256]");

  const json solver = root.value("solver", json::object());
  reject_unknown_keys(solver,
                      {"damping", "tol", "max_iter", "grid_nx", "grid_ns", "force_grid",
                       "dq_step", "r_cap", "random_inits", "init_seed"},
                      "solver");
  rc.solver.damping = number_or(solver, "damping", 0.5, "solver");
  rc.solver.tol = number_or(solver, "tol", 1e-9, "solver");
  rc.solver.max_iter = static_cast<int>(number_or(solver, "max_iter", 2000, "solver"));
  rc.solver.grid_nx = static_cast<int>(number_or(solver, "grid_nx", 64, "solver"));
  rc.solver.grid_ns = static_cast<int>(number_or(solver, "grid_ns", 64, "solver"));
  rc.solver.force_grid = solver.value("force_grid", false);
  rc.solver.dq_step = number_or(solver, "dq_step", 0.0, "solver");
  rc.solver.r_cap = number_or(solver, "r_cap", kDefaultRsCap, "solver");
  rc.solver.random_inits = static_cast<int>(number_or(solver, "random_inits", 3, "solver"));
  rc.solver.init_seed = static_cast<std::uint64_t>(
      number_or(solver, "init_seed", static_cast<double>(rc.solver.init_seed), "solver"));
  if (!(rc.solver.damping > 0.0 && rc.solver.damping <= 1.0))
    throw config_error("solver.damping must lie in (0, 1]");
  if (!(rc.solver.tol > 0.0)) throw config_error("solver.tol must be > 0");
  if (rc.solver.max_iter < 1) throw config_error("solver.max_iter must be >= 1");

  const json grid = root.value("grid", json::object());
  reject_unknown_keys(grid, {"lambda_values", "alpha_values", "jump_threshold"}, "grid");
  const bool needs_lambda_grid = command == "sweep-lambda" || command == "phase-diagram" ||
                                 command == "limit-curve";
  if (grid.contains("lambda_values") || ov.lambda_min || ov.lambda_count) {
    if (ov.lambda_min || ov.lambda_max || ov.lambda_count) {
      if (!(ov.lambda_min && ov.lambda_max && ov.lambda_count))
        throw config_error("--lambda-min/--lambda-max/--lambda-count must be given together");
      json linspace;
      linspace["min"] = *ov.lambda_min;
      linspace["max"] = *ov.lambda_max;
      linspace["count"] = *ov.lambda_count;
      rc.lambda_values = parse_grid(linspace, "grid.lambda_values");
    } else {
      rc.lambda_values = parse_grid(grid.at("lambda_values"), "grid.lambda_values");
    }
  } else if (needs_lambda_grid) {
    throw config_error(command + " needs grid.lambda_values (or --lambda-min/max/count)");
  }
  if (grid.contains("alpha_values"))
    rc.alpha_values = parse_grid(grid.at("alpha_values"), "grid.alpha_values");
  else if (command == "phase-diagram")
    throw config_error("phase-diagram needs grid.alpha_values");
  rc.jump_threshold = number_or(grid, "jump_threshold", 0.0, "grid");
  rc.detect_transition = ov.detect_transition.value_or(false);
  rc.warm_start = ov.warm_start.value_or(false);

  const json oracle = root.value("oracle", json::object());
  reject_unknown_keys(oracle, {"n", "p", "mi_samples", "mmse_samples", "dlambda", "seed"},
                      "oracle");
  rc.oracle_n = ov.oracle_n ? *ov.oracle_n : static_cast<int>(number_or(oracle, "n", 12, "oracle"));
  rc.oracle_p = ov.oracle_p ? *ov.oracle_p : static_cast<int>(number_or(oracle, "p", 6, "oracle"));
  rc.mi_samples = ov.samples ? *ov.samples
                             : static_cast<int>(number_or(oracle, "mi_samples",
                                                          kDefaultMiSamples, "oracle"));
  rc.mmse_samples = ov.samples ? *ov.samples
                               : static_cast<int>(number_or(oracle, "mmse_samples",
                                                            kDefaultMmseSamples, "oracle"));
  rc.dlambda = ov.dlambda ? *ov.dlambda : number_or(oracle, "dlambda", 0.5, "oracle");

  const json output = root.value("output", json::object());
  reject_unknown_keys(output, {"directory", "basename", "formats", "seed"}, "output");
  rc.out_dir = ov.out_dir ? *ov.out_dir : output.value("directory", std::string("."));
  rc.basename = ov.basename ? *ov.basename : output.value("basename", std::string("run"));
  rc.seed = ov.seed ? *ov.seed
                    : static_cast<std::uint64_t>(number_or(output, "seed", 42, "output"));
  if (ov.formats)
    rc.formats = *ov.formats;
  else if (output.contains("formats"))
    rc.formats = output.at("formats").get<std::vector<std::string>>();
  for (const std::string& f : rc.formats)
    if (f != "csv" && f != "json" && f != "svg")
      throw config_error("unknown output format \"" + f + "\" (expected csv, json or svg)");

  rc.threads = ov.threads ? *ov.threads
                          : static_cast<int>(number_or(root, "threads", 0, "config"));
  if (rc.threads == 0) rc.threads = env_thread_default();

  if (command == "potential") {
    rc.point.q_x = ov.q_x.value_or(0.0);
    rc.point.q_s = ov.q_s.value_or(0.0);
    rc.point.r_s = ov.r_s.value_or(0.0);
  }

  // Canonical echo: every default explicit, keys sorted by nlohmann::json.
  json echo;
  echo["command"] = rc.command;
  echo["model"] = {{"prior", prior_echo(rc.prior)},
                   {"activation", activation_echo(rc.activation)},
                   {"rank", rc.rank},
                   {"lambda", rc.lambda},
                   {"alpha", rc.alpha},
                   {"quad_order", rc.quad_order}};
  echo["solver"] = {{"damping", rc.solver.damping},
                    {"tol", rc.solver.tol},
                    {"max_iter", rc.solver.max_iter},
                    {"grid_nx", rc.solver.grid_nx},
                    {"grid_ns", rc.solver.grid_ns},
                    {"force_grid", rc.solver.force_grid},
                    {"dq_step", rc.solver.dq_step},
                    {"r_cap", rc.solver.r_cap},
                    {"random_inits", rc.solver.random_inits},
                    {"init_seed", rc.solver.init_seed}};
  echo["grid"] = {{"lambda_values", rc.lambda_values},
                  {"alpha_values", rc.alpha_values},
                  {"jump_threshold", rc.jump_threshold},
                  {"detect_transition", rc.detect_transition},
                  {"warm_start", rc.warm_start}};
  echo["oracle"] = {{"n", rc.oracle_n},
                    {"p", rc.oracle_p},
                    {"mi_samples", rc.mi_samples},
                    {"mmse_samples", rc.mmse_samples},
                    {"dlambda", rc.dlambda}};
  echo["output"] = {{"directory", rc.out_dir},
                    {"basename", rc.basename},
                    {"formats", rc.formats},
                    {"seed", rc.seed}};
  echo["threads"] = rc.threads;
  if (command == "potential")
    echo["point"] = {{"q_x", rc.point.q_x}, {"q_s", rc.point.q_s}, {"r_s", rc.point.r_s}};
  rc.resolved = echo;
  rc.hash = fnv1a_hex(echo.dump());
  return rc;
}

}  // namespace glmtensor
