#include "tgm/config.hpp"

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <vector>

namespace tgm {

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const ojson& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(ctx + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok) bad(ctx + ": unknown key '" + item.key() + "'");
  }
}

const ojson& need(const ojson& obj, const std::string& ctx, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) bad(ctx + ": missing key '" + key + "'");
  return *it;
}

double as_num(const ojson& v, const std::string& ctx) {
  if (!v.is_number()) bad(ctx + " must be a number");
  return v.get<double>();
}

double need_num(const ojson& obj, const std::string& ctx, const char* key) {
  return as_num(need(obj, ctx, key), ctx + "." + key);
}

double opt_num(const ojson& obj, const std::string& ctx, const char* key, double def) {
  const auto it = obj.find(key);
  return it == obj.end() ? def : as_num(*it, ctx + "." + key);
}

std::size_t opt_count(const ojson& obj, const std::string& ctx, const char* key,
                      std::size_t def) {
  const auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_number_unsigned()) bad(ctx + "." + key + " must be a nonnegative integer");
  return it->get<std::size_t>();
}

std::string need_str(const ojson& obj, const std::string& ctx, const char* key) {
  const auto& v = need(obj, ctx, key);
  if (!v.is_string()) bad(ctx + "." + key + " must be a string");
  return v.get<std::string>();
}

std::string opt_str(const ojson& obj, const std::string& ctx, const char* key,
                    const std::string& def) {
  const auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_string()) bad(ctx + "." + key + " must be a string");
  return it->get<std::string>();
}

std::vector<double> num_list(const ojson& v, const std::string& ctx) {
  if (!v.is_array()) bad(ctx + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(as_num(e, ctx + " element"));
  return out;
}

SojournDistribution parse_dist(const ojson& d, const std::string& ctx) {
  const std::string kind = need_str(d, ctx, "kind");
  if (kind == "exponential") {
    check_keys(d, ctx, {"kind", "rate"});
    return exponential_sojourn(need_num(d, ctx, "rate"));
  }
  if (kind == "gamma") {
    check_keys(d, ctx, {"kind", "shape", "rate"});
    return gamma_sojourn(need_num(d, ctx, "shape"), need_num(d, ctx, "rate"));
  }
  if (kind == "weibull") {
    check_keys(d, ctx, {"kind", "shape", "scale"});
    return weibull_sojourn(need_num(d, ctx, "shape"), need_num(d, ctx, "scale"));
  }
  if (kind == "table") {
    check_keys(d, ctx, {"kind", "t", "survival"});
    return tabulated_sojourn(num_list(need(d, ctx, "t"), ctx + ".t"),
                             num_list(need(d, ctx, "survival"), ctx + ".survival"));
  }
  bad(ctx + ": unknown distribution kind '" + kind + "'");
}

RegimeSpec parse_regime(const ojson& r, const std::string& ctx) {
  const std::string kind = need_str(r, ctx, "kind");
  if (kind == "constant") {
    check_keys(r, ctx, {"kind", "c", "h"});
    return constant_regime(need_num(r, ctx, "c"), need_num(r, ctx, "h"));
  }
  if (kind == "hyperbolic") {
    check_keys(r, ctx, {"kind", "a", "b"});
    return hyperbolic_regime(need_num(r, ctx, "a"), need_num(r, ctx, "b"));
  }
  if (kind == "linear") {
    check_keys(r, ctx, {"kind", "c_slope", "h_slope"});
    return linear_regime(need_num(r, ctx, "c_slope"), need_num(r, ctx, "h_slope"));
  }
  if (kind == "table2d") {
    check_keys(r, ctx, {"kind", "prev_grid", "t_grid", "values", "jump_grid", "jump_values"});
    const auto& rows = need(r, ctx, "values");
    if (!rows.is_array()) bad(ctx + ".values must be an array of arrays");
    std::vector<std::vector<double>> values;
    values.reserve(rows.size());
    for (const auto& row : rows) values.push_back(num_list(row, ctx + ".values row"));
    return table_regime(num_list(need(r, ctx, "prev_grid"), ctx + ".prev_grid"),
                        num_list(need(r, ctx, "t_grid"), ctx + ".t_grid"), std::move(values),
                        num_list(need(r, ctx, "jump_grid"), ctx + ".jump_grid"),
                        num_list(need(r, ctx, "jump_values"), ctx + ".jump_values"));
  }
  bad(ctx + ": unknown regime kind '" + kind + "'");
}

void check_task(const ojson& task) {
  const std::string kind = need_str(task, "task", "kind");
  const auto it = task.find("seed");
  if (it == task.end()) bad("task: missing key 'seed' (seeds are mandatory)");
  if (!it->is_number_unsigned()) bad("task.seed must be a nonnegative integer");

  if (kind == "simulate") {
    check_keys(task, "task", {"kind", "seed", "horizon", "n_samples"});
  } else if (kind == "moments") {
    check_keys(task, "task", {"kind", "seed", "t_max", "n_steps", "method", "mode"});
    need_num(task, "task", "t_max");
  } else if (kind == "density") {
    check_keys(task, "task",
               {"kind", "seed", "t", "observation_start", "n_steps", "x_lo", "x_hi", "n_x"});
    need_num(task, "task", "t");
  } else if (kind == "martingale-check") {
    check_keys(task, "task", {"kind", "seed", "t_max", "n_grid", "tolerance"});
    need_num(task, "task", "t_max");
  } else if (kind == "measure-check") {
    check_keys(task, "task", {"kind", "seed", "lambda0", "lambda1", "horizon", "n_paths"});
    need_num(task, "task", "lambda0");
    need_num(task, "task", "lambda1");
  } else if (kind == "price") {
    check_keys(task, "task", {"kind", "seed", "method", "n_steps", "n_nodes", "n_paths"});
  } else if (kind == "hv") {
    check_keys(task, "task",
               {"kind", "seed", "t_min", "t_max", "n_points", "spacing", "method", "n_steps"});
    need_num(task, "task", "t_max");
  } else {
    bad("task: unknown kind '" + kind + "'");
  }
}

}  // namespace

ExperimentConfig parse_config(const ojson& doc) {
  check_keys(doc, "config", {"name", "model", "task", "output"});

  ExperimentConfig cfg;
  cfg.name = need_str(doc, "config", "name");
  if (cfg.name.empty()) bad("name must be nonempty");
  for (char ch : cfg.name)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-' && ch != '.')
      bad("name contains a character outside [A-Za-z0-9._-]");

  const auto& model = need(doc, "config", "model");
  check_keys(model, "model",
             {"dist", "regimes", "initial_state", "spot", "maturity", "rates", "option"});

  const auto& dist = need(model, "model", "dist");
  if (!dist.is_array() || dist.size() != 2) bad("model.dist must be an array of 2 laws");
  cfg.market.q_dist = {parse_dist(dist[0], "model.dist[0]"),
                       parse_dist(dist[1], "model.dist[1]")};

  const auto& regimes = need(model, "model", "regimes");
  if (!regimes.is_array() || regimes.size() != 2)
    bad("model.regimes must be an array of 2 regimes");
  cfg.market.regimes = {parse_regime(regimes[0], "model.regimes[0]"),
                        parse_regime(regimes[1], "model.regimes[1]")};

  const auto st = opt_count(model, "model", "initial_state", 0);
  if (st > 1) bad("model.initial_state must be 0 or 1");
  cfg.initial_state = static_cast<int>(st);

  cfg.market.spot = opt_num(model, "model", "spot", 1.0);
  cfg.market.maturity = opt_num(model, "model", "maturity", 1.0);

  if (model.contains("rates")) {
    const auto r = num_list(model["rates"], "model.rates");
    if (r.size() != 2) bad("model.rates must hold 2 constant rates");
    cfg.market.rates = RegimePair{constant_regime(r[0], 0.0), constant_regime(r[1], 0.0)};
  }

  if (model.contains("option")) {
    const auto& opt = model["option"];
    check_keys(opt, "model.option", {"payoff", "strike", "maturity"});
    cfg.payoff_kind = need_str(opt, "model.option", "payoff");
    const double maturity = opt_num(opt, "model.option", "maturity", 0.0);
    if (cfg.payoff_kind == "call")
      cfg.option = call_option(need_num(opt, "model.option", "strike"));
    else if (cfg.payoff_kind == "put")
      cfg.option = put_option(need_num(opt, "model.option", "strike"));
    else if (cfg.payoff_kind == "digital")
      cfg.option = digital_option(need_num(opt, "model.option", "strike"));
    else
      bad("model.option.payoff must be call, put, or digital");
    cfg.option.maturity = maturity;
  }

  const auto& task = need(doc, "config", "task");
  check_task(task);
  cfg.task = task;

  cfg.prefix = cfg.name;
  if (doc.contains("output")) {
    const auto& output = doc["output"];
    check_keys(output, "output", {"prefix"});
    cfg.prefix = opt_str(output, "output", "prefix", cfg.name);
  }
  for (char ch : cfg.prefix)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-' && ch != '.')
      bad("output.prefix contains a character outside [A-Za-z0-9._-]");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) bad("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  ojson doc;
  try {
    doc = ojson::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    bad(std::string("JSON parse failed: ") + e.what());
  }
  return parse_config(doc);
}

void apply_override(ojson& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) bad("override must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    tokens.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (const auto& tok : tokens)
    if (tok.empty()) bad("override path has an empty segment: '" + path + "'");

  ojson value;
  try {
    value = ojson::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;  // unquoted strings stay strings
  }

  ojson* cur = &doc;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const bool last = k + 1 == tokens.size();
    if (cur->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(tokens[k]);
      } catch (...) {
        bad("override: '" + tokens[k] + "' is not an array index");
      }
      if (idx >= cur->size()) bad("override: index " + tokens[k] + " out of range");
      cur = &(*cur)[idx];
    } else {
      if (!cur->is_object()) *cur = ojson::object();
      cur = &(*cur)[tokens[k]];
    }
    if (last) *cur = value;
  }
}

ProcessModel process_model(const ExperimentConfig& cfg) {
  ProcessModel m;
  m.switching.dist = cfg.market.q_dist;
  m.switching.initial_state = cfg.initial_state;
  m.regimes = cfg.market.regimes;
  return m;
}

}  // namespace tgm
