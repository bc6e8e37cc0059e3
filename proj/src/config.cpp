#include "fedsim/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "fedsim/linalg.hpp"
#include "fedsim/util.hpp"

namespace fedsim {

namespace {

using nlohmann::json;

enum class Kind { I64, U64, F64, Bool, Str, U64List, F64List };

struct Binding {
  Kind kind;
  void* ptr;
};

// Dotted key -> field registry; drives JSON parsing, --set overrides, and
// write_back from one table.
std::vector<std::pair<std::string, Binding>> bindings(ExperimentConfig& c) {
  return {
      {"method", {Kind::Str, &c.method}},
      {"seed", {Kind::U64, &c.seed}},
      {"seeds", {Kind::U64List, &c.seeds}},
      {"out", {Kind::Str, &c.out}},
      {"federation.clients", {Kind::I64, &c.federation.clients}},
      {"federation.rounds", {Kind::I64, &c.federation.rounds}},
      {"federation.epsilon", {Kind::F64, &c.federation.epsilon}},
      {"train.epochs", {Kind::I64, &c.train.epochs}},
      {"train.batch", {Kind::I64, &c.train.batch}},
      {"train.eta", {Kind::F64, &c.train.eta}},
      {"train.hidden", {Kind::I64, &c.train.hidden}},
      {"train.threads", {Kind::I64, &c.train.threads}},
      {"fedskc.tau", {Kind::F64, &c.fedskc.tau}},
      {"fedskc.beta", {Kind::F64, &c.fedskc.beta}},
      {"fedskc.neighbors", {Kind::I64, &c.fedskc.neighbors}},
      {"fedskc.lambda_lcl", {Kind::F64, &c.fedskc.lambda_lcl}},
      {"fedskc.u_floor", {Kind::F64, &c.fedskc.u_floor}},
      {"fedskc.gda", {Kind::Bool, &c.fedskc.gda}},
      {"fedskc.gda_mode", {Kind::Str, &c.fedskc.gda_mode}},
      {"fedskc.gpr", {Kind::Bool, &c.fedskc.gpr}},
      {"fedskc.gpr_affine", {Kind::Bool, &c.fedskc.gpr_affine}},
      {"fedprox.mu", {Kind::F64, &c.fedprox.mu}},
      {"data.classes", {Kind::I64, &c.data.classes}},
      {"data.input_dim", {Kind::I64, &c.data.input_dim}},
      {"data.n_max", {Kind::I64, &c.data.n_max}},
      {"data.rho", {Kind::F64, &c.data.rho}},
      {"data.alpha", {Kind::F64, &c.data.alpha}},
      {"data.sep", {Kind::F64, &c.data.sep}},
      {"data.noise", {Kind::F64, &c.data.noise}},
      {"data.test_per_class", {Kind::I64, &c.data.test_per_class}},
      {"theory.l1", {Kind::F64, &c.theory.l1}},
      {"theory.l2", {Kind::F64, &c.theory.l2}},
      {"theory.grad_bound", {Kind::F64, &c.theory.grad_bound}},
      {"theory.sigma2", {Kind::F64, &c.theory.sigma2}},
      {"theory.xi", {Kind::F64, &c.theory.xi}},
      {"theory.loss0", {Kind::F64, &c.theory.loss0}},
      {"theory.loss_star", {Kind::F64, &c.theory.loss_star}},
      {"report.targets", {Kind::F64List, &c.report.targets}},
  };
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw ConfigError("config: key '" + key + "' " + why);
}

void set_from_json(const std::string& key, const Binding& b, const json& v) {
  switch (b.kind) {
    case Kind::I64:
      if (!v.is_number_integer() && !v.is_number_unsigned())
        bad_key(key, "expects an integer");
      *static_cast<std::int64_t*>(b.ptr) = v.get<std::int64_t>();
      break;
    case Kind::U64:
      if (!v.is_number_unsigned() &&
          !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        bad_key(key, "expects a nonnegative integer");
      *static_cast<std::uint64_t*>(b.ptr) = v.get<std::uint64_t>();
      break;
    case Kind::F64:
      if (!v.is_number()) bad_key(key, "expects a number");
      *static_cast<double*>(b.ptr) = v.get<double>();
      break;
    case Kind::Bool:
      if (!v.is_boolean()) bad_key(key, "expects true or false");
      *static_cast<bool*>(b.ptr) = v.get<bool>();
      break;
    case Kind::Str:
      if (!v.is_string()) bad_key(key, "expects a string");
      *static_cast<std::string*>(b.ptr) = v.get<std::string>();
      break;
    case Kind::U64List: {
      if (!v.is_array()) bad_key(key, "expects an array of integers");
      auto& out = *static_cast<std::vector<std::uint64_t>*>(b.ptr);
      out.clear();
      for (const auto& e : v) {
        if (!e.is_number_unsigned() &&
            !(e.is_number_integer() && e.get<std::int64_t>() >= 0))
          bad_key(key, "expects nonnegative integer entries");
        out.push_back(e.get<std::uint64_t>());
      }
      break;
    }
    case Kind::F64List: {
      if (!v.is_array()) bad_key(key, "expects an array of numbers");
      auto& out = *static_cast<std::vector<double>*>(b.ptr);
      out.clear();
      for (const auto& e : v) {
        if (!e.is_number()) bad_key(key, "expects numeric entries");
        out.push_back(e.get<double>());
      }
      break;
    }
  }
}

std::uint64_t parse_u64_token(const std::string& key, const std::string& tok) {
  try {
    std::size_t used = 0;
    const std::uint64_t value = std::stoull(tok, &used);
    if (used != tok.size() || tok.empty() || tok[0] == '-')
      bad_key(key, "expects a nonnegative integer, got '" + tok + "'");
    return value;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_key(key, "expects a nonnegative integer, got '" + tok + "'");
  }
}

double parse_f64_token(const std::string& key, const std::string& tok) {
  try {
    std::size_t used = 0;
    const double value = std::stod(tok, &used);
    if (used != tok.size() || tok.empty())
      bad_key(key, "expects a number, got '" + tok + "'");
    return value;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_key(key, "expects a number, got '" + tok + "'");
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string tok;
  std::stringstream ss(s);
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

void set_from_string(const std::string& key, const Binding& b,
                     const std::string& value) {
  switch (b.kind) {
    case Kind::I64: {
      try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(value, &used);
        if (used != value.size() || value.empty())
          bad_key(key, "expects an integer, got '" + value + "'");
        *static_cast<std::int64_t*>(b.ptr) = v;
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception&) {
        bad_key(key, "expects an integer, got '" + value + "'");
      }
      break;
    }
    case Kind::U64:
      *static_cast<std::uint64_t*>(b.ptr) = parse_u64_token(key, value);
      break;
    case Kind::F64:
      *static_cast<double*>(b.ptr) = parse_f64_token(key, value);
      break;
    case Kind::Bool:
      if (value == "true" || value == "1")
        *static_cast<bool*>(b.ptr) = true;
      else if (value == "false" || value == "0")
        *static_cast<bool*>(b.ptr) = false;
      else
        bad_key(key, "expects true or false, got '" + value + "'");
      break;
    case Kind::Str:
      *static_cast<std::string*>(b.ptr) = value;
      break;
    case Kind::U64List: {
      auto& out = *static_cast<std::vector<std::uint64_t>*>(b.ptr);
      out.clear();
      for (const auto& tok : split_commas(value))
        out.push_back(parse_u64_token(key, tok));
      break;
    }
    case Kind::F64List: {
      auto& out = *static_cast<std::vector<double>*>(b.ptr);
      out.clear();
      for (const auto& tok : split_commas(value))
        out.push_back(parse_f64_token(key, tok));
      break;
    }
  }
}

void flatten(const json& node, const std::string& prefix,
             std::vector<std::pair<std::string, const json*>>& out) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      flatten(*it, key, out);
    else
      out.emplace_back(key, &*it);
  }
}

void check_range(bool ok, const std::string& key, const std::string& range,
                 const std::string& got) {
  if (!ok)
    throw ConfigError("config: " + key + " must be in " + range + ", got " +
                      got);
}

void check_range(bool ok, const std::string& key, const std::string& range,
                 double got) {
  check_range(ok, key, range, format_double(got));
}

}  // namespace

Method ExperimentConfig::method_enum() const { return method_from_name(method); }

GdaMode ExperimentConfig::gda_mode_enum() const {
  if (fedskc.gda_mode == "normalized") return GdaMode::Normalized;
  if (fedskc.gda_mode == "raw") return GdaMode::Raw;
  throw ConfigError("config: fedskc.gda_mode must be one of {normalized, raw}, got '" +
                    fedskc.gda_mode + "'");
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::string>& overrides,
                                   const std::string& origin) {
  json doc;
  try {
    doc = text.empty() ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + origin + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object())
    throw ConfigError("config: " + origin + " must be a JSON object");

  ExperimentConfig cfg;
  auto table = bindings(cfg);
  auto find = [&table](const std::string& key) -> const Binding* {
    for (const auto& [k, b] : table)
      if (k == key) return &b;
    return nullptr;
  };

  std::vector<std::pair<std::string, const json*>> flat;
  flatten(doc, "", flat);
  for (const auto& [key, value] : flat) {
    const Binding* b = find(key);
    if (!b) bad_key(key, "is not a recognized setting");
    set_from_json(key, *b, *value);
  }

  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("config: override '" + ov +
                        "' must have the form key=value");
    const std::string key = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    const Binding* b = find(key);
    if (!b) bad_key(key, "is not a recognized setting");
    set_from_string(key, *b, value);
  }

  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides, path);
}

void validate_config(const ExperimentConfig& cfg) {
  method_from_name(cfg.method);  // throws on unknown method
  check_range(cfg.federation.clients >= 1, "federation.clients", "[1, inf)",
              std::to_string(cfg.federation.clients));
  check_range(cfg.federation.rounds >= 1, "federation.rounds", "[1, inf)",
              std::to_string(cfg.federation.rounds));
  check_range(cfg.federation.epsilon > 0.0 && cfg.federation.epsilon <= 1.0,
              "federation.epsilon", "(0, 1]", cfg.federation.epsilon);
  check_range(cfg.train.epochs >= 1, "train.epochs", "[1, inf)",
              std::to_string(cfg.train.epochs));
  check_range(cfg.train.batch >= 1, "train.batch", "[1, inf)",
              std::to_string(cfg.train.batch));
  check_range(cfg.train.eta >= 0.0 && std::isfinite(cfg.train.eta), "train.eta",
              "[0, inf)", cfg.train.eta);
  check_range(cfg.train.hidden >= 1, "train.hidden", "[1, inf)",
              std::to_string(cfg.train.hidden));
  check_range(cfg.train.threads >= 1, "train.threads", "[1, inf)",
              std::to_string(cfg.train.threads));
  check_range(cfg.fedskc.tau > 0.0 && std::isfinite(cfg.fedskc.tau),
              "fedskc.tau", "(0, inf)", cfg.fedskc.tau);
  check_range(cfg.fedskc.beta >= 0.0 && cfg.fedskc.beta <= 1.0, "fedskc.beta",
              "[0, 1]", cfg.fedskc.beta);
  check_range(cfg.fedskc.neighbors >= 0, "fedskc.neighbors", "[0, inf)",
              std::to_string(cfg.fedskc.neighbors));
  check_range(cfg.fedskc.lambda_lcl >= 0.0 &&
                  std::isfinite(cfg.fedskc.lambda_lcl),
              "fedskc.lambda_lcl", "[0, inf)", cfg.fedskc.lambda_lcl);
  check_range(cfg.fedskc.u_floor > 0.0 && std::isfinite(cfg.fedskc.u_floor),
              "fedskc.u_floor", "(0, inf)", cfg.fedskc.u_floor);
  cfg.gda_mode_enum();  // throws on unknown mode
  check_range(cfg.fedprox.mu >= 0.0 && std::isfinite(cfg.fedprox.mu),
              "fedprox.mu", "[0, inf)", cfg.fedprox.mu);
  check_range(cfg.data.classes >= 2, "data.classes", "[2, inf)",
              std::to_string(cfg.data.classes));
  check_range(cfg.data.input_dim >= 2, "data.input_dim", "[2, inf)",
              std::to_string(cfg.data.input_dim));
  check_range(cfg.data.n_max >= 1, "data.n_max", "[1, inf)",
              std::to_string(cfg.data.n_max));
  check_range(cfg.data.rho >= 1.0 && std::isfinite(cfg.data.rho), "data.rho",
              "[1, inf)", cfg.data.rho);
  check_range(cfg.data.alpha > 0.0 && std::isfinite(cfg.data.alpha),
              "data.alpha", "(0, inf)", cfg.data.alpha);
  check_range(cfg.data.sep > 0.0 && std::isfinite(cfg.data.sep), "data.sep",
              "(0, inf)", cfg.data.sep);
  check_range(cfg.data.noise > 0.0 && std::isfinite(cfg.data.noise),
              "data.noise", "(0, inf)", cfg.data.noise);
  check_range(cfg.data.test_per_class >= 1, "data.test_per_class", "[1, inf)",
              std::to_string(cfg.data.test_per_class));
  check_range(cfg.theory.l1 >= 0.0, "theory.l1", "[0, inf)", cfg.theory.l1);
  check_range(cfg.theory.l2 >= 0.0, "theory.l2", "[0, inf)", cfg.theory.l2);
  check_range(cfg.theory.grad_bound >= 0.0, "theory.grad_bound", "[0, inf)",
              cfg.theory.grad_bound);
  check_range(cfg.theory.sigma2 >= 0.0, "theory.sigma2", "[0, inf)",
              cfg.theory.sigma2);
  check_range(cfg.theory.xi > 0.0, "theory.xi", "(0, inf)", cfg.theory.xi);
  for (double t : cfg.report.targets)
    check_range(t >= 0.0 && t <= 1.0, "report.targets", "[0, 1]", t);
}

std::string write_back(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  json doc = json::object();
  for (const auto& [key, b] : bindings(copy)) {
    json value;
    switch (b.kind) {
      case Kind::I64:
        value = *static_cast<const std::int64_t*>(b.ptr);
        break;
      case Kind::U64:
        value = *static_cast<const std::uint64_t*>(b.ptr);
        break;
      case Kind::F64:
        value = *static_cast<const double*>(b.ptr);
        break;
      case Kind::Bool:
        value = *static_cast<const bool*>(b.ptr);
        break;
      case Kind::Str:
        value = *static_cast<const std::string*>(b.ptr);
        break;
      case Kind::U64List:
        value = *static_cast<const std::vector<std::uint64_t>*>(b.ptr);
        break;
      case Kind::F64List:
        value = *static_cast<const std::vector<double>*>(b.ptr);
        break;
    }
    // Split "block.field" back into nested objects.
    const auto dot = key.find('.');
    if (dot == std::string::npos)
      doc[key] = std::move(value);
    else
      doc[key.substr(0, dot)][key.substr(dot + 1)] = std::move(value);
  }
  return doc.dump(2) + "\n";
}

}  // namespace fedsim
