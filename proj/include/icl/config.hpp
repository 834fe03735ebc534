#pragma once

// Experiment configuration: a strict subset of TOML (sections, dotted keys,
// strings, integers, floats, booleans, flat arrays) checked against a closed
// schema. Every field is addressable by its dotted path, which is also how
// `--set` overrides and sweeps name it.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "icl/error.hpp"
#include "icl/eval.hpp"
#include "icl/tasks.hpp"
#include "icl/trainer.hpp"
#include "icl/transformer.hpp"

namespace icl {

using Scalar = std::variant<bool, std::int64_t, double, std::string>;
using ConfigValue = std::variant<bool, std::int64_t, double, std::string, std::vector<Scalar>>;

struct TomlEntry {
  std::string path;
  ConfigValue value;
  std::size_t line = 0;
};

namespace toml {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Drops a trailing comment, respecting quoted strings.
inline std::string strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == '\\' && quote == '"') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

inline int bracket_depth(std::string_view s) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\' && quote == '"') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
    }
  }
  return depth;
}

inline bool is_bare(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

/// Validates a dotted key such as `noise.bernoulli.p`.
inline std::string parse_key(std::string_view raw) {
  std::string out;
  std::size_t start = 0;
  raw = trim(raw);
  while (true) {
    const std::size_t dot = raw.find('.', start);
    const std::string_view part = trim(raw.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (part.empty()) throw ConfigError("empty key segment in '" + std::string(raw) + "'");
    for (char c : part)
      if (!is_bare(c)) throw ConfigError("invalid character in key '" + std::string(raw) + "'");
    if (!out.empty()) out += '.';
    out += part;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

class ValueParser {
 public:
  explicit ValueParser(std::string_view s) : s_(s) {}

  ConfigValue parse_value() {
    skip_ws();
    ConfigValue v;
    if (peek() == '[') {
      v = parse_array();
    } else {
      v = std::visit([](auto&& x) -> ConfigValue { return x; }, parse_scalar());
    }
    skip_ws();
    if (i_ != s_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(what + " in value '" + std::string(trim(s_)) + "'");
  }
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) ++i_;
  }

  std::vector<Scalar> parse_array() {
    ++i_;
    std::vector<Scalar> out;
    skip_ws();
    if (peek() == ']') {
      ++i_;
      return out;
    }
    while (true) {
      skip_ws();
      if (peek() == '[') fail("nested arrays are not supported");
      out.push_back(parse_scalar());
      skip_ws();
      if (peek() == ',') {
        ++i_;
        skip_ws();
        if (peek() == ']') {
          ++i_;
          return out;
        }
        continue;
      }
      if (peek() == ']') {
        ++i_;
        return out;
      }
      fail("expected ',' or ']'");
    }
  }

  Scalar parse_scalar() {
    const char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') {
      const std::size_t end = s_.find('\'', i_ + 1);
      if (end == std::string_view::npos) fail("unterminated string");
      std::string out(s_.substr(i_ + 1, end - i_ - 1));
      i_ = end + 1;
      return out;
    }
    std::size_t j = i_;
    while (j < s_.size() && s_[j] != ',' && s_[j] != ']' && s_[j] != ' ' && s_[j] != '\t' && s_[j] != '\n') ++j;
    const std::string tok(s_.substr(i_, j - i_));
    i_ = j;
    if (tok.empty()) fail("missing value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (std::size_t q = 0; q < tok.size(); ++q) {
      if (tok[q] != '_') digits += tok[q];
      else if (q == 0 || q + 1 == tok.size()) fail("misplaced underscore");
    }
    const bool is_int = digits.find_first_of(".eEinfa") == std::string::npos;
    if (is_int) {
      errno = 0;
      char* end = nullptr;
      const long long v = std::strtoll(digits.c_str(), &end, 10);
      if (end == digits.c_str() || *end != '\0') fail("not a number or keyword");
      if (errno == ERANGE) fail("integer out of range");
      return static_cast<std::int64_t>(v);
    }
    if (digits == "inf" || digits == "+inf") return std::numeric_limits<double>::infinity();
    if (digits == "-inf") return -std::numeric_limits<double>::infinity();
    if (digits.find_first_of("0123456789") == std::string::npos) fail("not a number or keyword");
    char* end = nullptr;
    const double v = std::strtod(digits.c_str(), &end);
    if (end == digits.c_str() || *end != '\0' || std::isnan(v)) fail("malformed float");
    return v;
  }

  std::string parse_basic_string() {
    ++i_;
    std::string out;
    while (true) {
      if (i_ >= s_.size()) fail("unterminated string");
      const char c = s_[i_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (i_ >= s_.size()) fail("unterminated escape");
      const char e = s_[i_++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

inline ConfigValue parse_value(std::string_view s) { return ValueParser(s).parse_value(); }

}  // namespace toml

/// Parses a document into dotted-path entries. Errors carry `source:line`.
[[nodiscard]] inline std::vector<TomlEntry> parse_toml(std::string_view text, const std::string& source = "<config>") {
  std::vector<TomlEntry> out;
  std::map<std::string, std::size_t> seen;
  std::string prefix;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  auto where = [&](std::size_t l) { return source + ":" + std::to_string(l) + ": "; };
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t start_line = lineno;
    std::string line = toml::strip_comment(raw);
    const auto t = toml::trim(line);
    if (t.empty()) continue;
    try {
      if (t.front() == '[') {
        if (t.size() < 3 || t.back() != ']' || t[1] == '[') throw ConfigError("malformed section header");
        prefix = toml::parse_key(t.substr(1, t.size() - 2));
        continue;
      }
      const std::size_t eq = t.find('=');
      if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'");
      const std::string key = toml::parse_key(t.substr(0, eq));
      std::string value(toml::trim(t.substr(eq + 1)));
      while (toml::bracket_depth(value) > 0) {
        if (!std::getline(in, raw)) throw ConfigError("unterminated array");
        ++lineno;
        value += "\n" + toml::strip_comment(raw);
      }
      const std::string path = prefix.empty() ? key : prefix + "." + key;
      if (auto it = seen.find(path); it != seen.end())
        throw ConfigError("duplicate key '" + path + "' (first set on line " + std::to_string(it->second) + ")");
      seen.emplace(path, start_line);
      out.push_back({path, toml::parse_value(value), start_line});
    } catch (const ConfigError& e) {
      throw ConfigError(where(start_line) + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schema

enum class KeyType { integer, real, boolean, string, int_list, string_list };

struct KeySpec {
  std::string path;
  KeyType type;
  std::optional<ConfigValue> fallback;  ///< nullopt: unset unless given
  std::string doc;
};

[[nodiscard]] inline const std::vector<KeySpec>& config_schema() {
  using KT = KeyType;
  auto I = [](std::int64_t v) { return std::optional<ConfigValue>(v); };
  auto R = [](double v) { return std::optional<ConfigValue>(v); };
  auto B = [](bool v) { return std::optional<ConfigValue>(v); };
  auto S = [](const char* v) { return std::optional<ConfigValue>(std::string(v)); };
  auto SL = [](std::initializer_list<const char*> v) {
    std::vector<Scalar> out;
    for (const char* s : v) out.emplace_back(std::string(s));
    return std::optional<ConfigValue>(out);
  };
  static const std::vector<KeySpec> schema = {
      {"task.d", KT::integer, I(5), "feature dimension"},
      {"task.k", KT::integer, I(11), "context examples per task (eval samples k+1 rows)"},
      {"task.seed", KT::integer, I(0), "seed of the single task built by library calls"},
      {"prior.kind", KT::string, S("gaussian"), "gaussian | laplace | exponential | unit_sphere"},
      {"prior.gaussian.sigma", KT::real, R(1.0), ""},
      {"prior.laplace.b", KT::real, R(1.0), ""},
      {"prior.exponential.lambda", KT::real, R(1.0), "rate"},
      {"features.kind", KT::string, S("iid_gaussian"), "iid_gaussian | gamma | var1"},
      {"features.gamma.alpha", KT::real, R(2.0), "shape"},
      {"features.gamma.theta", KT::real, R(1.0), "scale"},
      {"features.var1.rho", KT::real, R(0.4), ""},
      {"features.var1.sigma_innov", KT::real, R(1.0), ""},
      {"noise.kind", KT::string, S("none"),
       "none | gaussian | bernoulli | exponential | gamma | poisson | student_t"},
      {"noise.scale", KT::real, R(1.0), "multiplies every draw"},
      {"noise.target_variance", KT::real, R(0.0), "> 0 replaces scale with the calibrated one"},
      {"noise.gaussian.sigma", KT::real, R(1.0), ""},
      {"noise.bernoulli.p", KT::real, R(0.25), ""},
      {"noise.exponential.lambda", KT::real, R(1.0), "rate"},
      {"noise.gamma.alpha", KT::real, R(2.0), "shape"},
      {"noise.gamma.theta", KT::real, R(1.0), "scale"},
      {"noise.poisson.lambda", KT::real, R(1.0), ""},
      {"noise.student_t.nu", KT::real, R(2.0), ""},
      {"model.d_model", KT::integer, I(64), ""},
      {"model.n_layers", KT::integer, I(3), ""},
      {"model.n_heads", KT::integer, I(2), ""},
      {"model.max_seq", KT::integer, I(0), "0: max(4d+3, 2k+1)"},
      {"model.loss", KT::string, S("l2"), "l2 | l1"},
      {"train.batch_size", KT::integer, I(64), ""},
      {"train.total_steps", KT::integer, I(2000), ""},
      {"train.lr", KT::real, R(3e-4), ""},
      {"train.eval_every", KT::integer, I(100), "metrics row interval"},
      {"train.checkpoint_every", KT::integer, I(0), "0: final checkpoint only"},
      {"train.seed", KT::integer, I(0), ""},
      {"train.curriculum", KT::boolean, B(true), ""},
      {"train.curriculum_period", KT::integer, I(2000), ""},
      {"train.d_start", KT::integer, I(5), ""},
      {"train.k_start", KT::integer, I(11), ""},
      {"train.d_step", KT::integer, I(1), ""},
      {"train.k_step", KT::integer, I(2), ""},
      {"eval.methods", KT::string_list, SL({"ols", "ridge", "l1_lp", "l1_admm"}), ""},
      {"eval.ridge_alpha", KT::real, R(0.01), ""},
      {"eval.k_values", KT::int_list, std::nullopt, "unset: 1..task.k"},
      {"eval.n_trials", KT::integer, I(100), ""},
      {"eval.metric", KT::string, S("squared"), "squared | absolute"},
      {"eval.normalize", KT::string, S("signal_power"), "none | signal_power | dimension"},
      {"eval.n_boot", KT::integer, I(1000), ""},
      {"eval.seed", KT::integer, I(0), ""},
      {"eval.checkpoint", KT::string, S(""), "needed when methods include transformer"},
      {"eval.admm_penalty", KT::real, R(1.0), ""},
      {"eval.admm_max_iter", KT::integer, I(2000), ""},
      {"eval.admm_tol", KT::real, R(1e-7), "primal and dual"},
      {"output.dir", KT::string, S("out"), ""},
  };
  return schema;
}

[[nodiscard]] inline const KeySpec* find_key(const std::string& path) {
  for (const auto& k : config_schema())
    if (k.path == path) return &k;
  return nullptr;
}

[[nodiscard]] inline std::string type_name(KeyType t) {
  switch (t) {
    case KeyType::integer: return "integer";
    case KeyType::real: return "number";
    case KeyType::boolean: return "boolean";
    case KeyType::string: return "string";
    case KeyType::int_list: return "array of integers";
    case KeyType::string_list: return "array of strings";
  }
  return "value";
}

namespace detail {

/// Checks a parsed value against a key's type; integers widen to reals.
inline ConfigValue coerce(const KeySpec& key, const ConfigValue& v) {
  auto bad = [&]() -> ConfigError { return ConfigError("key '" + key.path + "' expects " + type_name(key.type)); };
  switch (key.type) {
    case KeyType::integer:
      if (auto p = std::get_if<std::int64_t>(&v)) {
        if (*p < 0) throw ConfigError("key '" + key.path + "' must be >= 0");
        return *p;
      }
      throw bad();
    case KeyType::real:
      if (auto p = std::get_if<std::int64_t>(&v)) return static_cast<double>(*p);
      if (auto p = std::get_if<double>(&v)) return *p;
      throw bad();
    case KeyType::boolean:
      if (std::holds_alternative<bool>(v)) return v;
      throw bad();
    case KeyType::string:
      if (std::holds_alternative<std::string>(v)) return v;
      throw bad();
    case KeyType::int_list: {
      auto p = std::get_if<std::vector<Scalar>>(&v);
      if (!p) throw bad();
      for (const auto& s : *p) {
        auto q = std::get_if<std::int64_t>(&s);
        if (!q) throw bad();
        if (*q < 0) throw ConfigError("key '" + key.path + "' entries must be >= 0");
      }
      return v;
    }
    case KeyType::string_list: {
      auto p = std::get_if<std::vector<Scalar>>(&v);
      if (!p) throw bad();
      for (const auto& s : *p)
        if (!std::holds_alternative<std::string>(s)) throw bad();
      return v;
    }
  }
  throw bad();
}

}  // namespace detail

/// Fully-resolved configuration: every schema key with a value or unset.
class ExperimentConfig {
 public:
  ExperimentConfig() {
    for (const auto& k : config_schema())
      if (k.fallback) values_.emplace(k.path, *k.fallback);
  }

  void set(const std::string& path, const ConfigValue& v) {
    const KeySpec* key = find_key(path);
    if (!key) throw ConfigError("unknown key '" + path + "'");
    values_[path] = detail::coerce(*key, v);
  }

  [[nodiscard]] bool has(const std::string& path) const { return values_.count(path) > 0; }
  [[nodiscard]] const ConfigValue& raw(const std::string& path) const {
    auto it = values_.find(path);
    if (it == values_.end()) throw ConfigError("key '" + path + "' is not set");
    return it->second;
  }

  [[nodiscard]] std::uint64_t get_uint(const std::string& p) const {
    return static_cast<std::uint64_t>(std::get<std::int64_t>(raw(p)));
  }
  [[nodiscard]] std::size_t get_size(const std::string& p) const { return static_cast<std::size_t>(get_uint(p)); }
  [[nodiscard]] double get_real(const std::string& p) const { return std::get<double>(raw(p)); }
  [[nodiscard]] bool get_bool(const std::string& p) const { return std::get<bool>(raw(p)); }
  [[nodiscard]] const std::string& get_string(const std::string& p) const { return std::get<std::string>(raw(p)); }
  [[nodiscard]] std::vector<std::size_t> get_size_list(const std::string& p) const {
    std::vector<std::size_t> out;
    for (const auto& s : std::get<std::vector<Scalar>>(raw(p)))
      out.push_back(static_cast<std::size_t>(std::get<std::int64_t>(s)));
    return out;
  }
  [[nodiscard]] std::vector<std::string> get_string_list(const std::string& p) const {
    std::vector<std::string> out;
    for (const auto& s : std::get<std::vector<Scalar>>(raw(p))) out.push_back(std::get<std::string>(s));
    return out;
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

 private:
  std::map<std::string, ConfigValue> values_;
};

/// Applies parsed entries; unknown keys and type errors name the line.
inline void apply_entries(ExperimentConfig& cfg, const std::vector<TomlEntry>& entries, const std::string& source) {
  for (const auto& e : entries) {
    try {
      cfg.set(e.path, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(source + ":" + std::to_string(e.line) + ": " + err.what());
    }
  }
}

/// `key=value`. Strings may be given bare and lists without brackets
/// (`eval.methods=ols,ridge`).
inline void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string path(toml::trim(std::string_view(assignment).substr(0, eq)));
  std::string text(toml::trim(std::string_view(assignment).substr(eq + 1)));
  const KeySpec* key = find_key(path);
  if (!key) throw ConfigError("--set: unknown key '" + path + "'");
  const bool list = key->type == KeyType::int_list || key->type == KeyType::string_list;
  if (list && (text.empty() || text.front() != '[')) {
    if (key->type == KeyType::string_list) {
      std::string quoted = "[";
      std::stringstream ss(text);
      std::string item;
      bool first = true;
      while (std::getline(ss, item, ',')) {
        const auto t = toml::trim(item);
        if (t.empty()) continue;
        if (!first) quoted += ",";
        quoted += t.front() == '"' || t.front() == '\'' ? std::string(t) : "\"" + std::string(t) + "\"";
        first = false;
      }
      text = quoted + "]";
    } else {
      text = "[" + text + "]";
    }
  }
  ConfigValue v;
  try {
    v = toml::parse_value(text);
  } catch (const ConfigError&) {
    if (key->type != KeyType::string) throw ConfigError("--set " + path + ": cannot parse '" + text + "'");
    v = text;
  }
  if (key->type == KeyType::string && !std::holds_alternative<std::string>(v)) v = text;
  try {
    cfg.set(path, v);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("--set: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON form (provenance)

namespace detail {

inline nlohmann::ordered_json scalar_json(const Scalar& s) {
  return std::visit([](auto&& x) { return nlohmann::ordered_json(x); }, s);
}

inline ConfigValue json_to_value(const nlohmann::json& j, const std::string& path) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    std::vector<Scalar> out;
    for (const auto& e : j) {
      if (e.is_boolean()) out.emplace_back(e.get<bool>());
      else if (e.is_number_integer()) out.emplace_back(e.get<std::int64_t>());
      else if (e.is_number_float()) out.emplace_back(e.get<double>());
      else if (e.is_string()) out.emplace_back(e.get<std::string>());
      else throw ConfigError("key '" + path + "': unsupported array element");
    }
    return out;
  }
  throw ConfigError("key '" + path + "': unsupported JSON value");
}

inline void flatten(const nlohmann::json& j, const std::string& prefix, ExperimentConfig& cfg) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) flatten(*it, path, cfg);
    else if (!it->is_null()) cfg.set(path, json_to_value(*it, path));
  }
}

}  // namespace detail

/// Nested object in schema order; unset keys appear as null.
[[nodiscard]] inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& key : config_schema()) {
    nlohmann::ordered_json* node = &root;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = key.path.find('.', start);
      if (dot == std::string::npos) break;
      node = &(*node)[key.path.substr(start, dot - start)];
      start = dot + 1;
    }
    auto& leaf = (*node)[key.path.substr(start)];
    if (!cfg.has(key.path)) {
      leaf = nullptr;
      continue;
    }
    leaf = std::visit(
        [](auto&& x) -> nlohmann::ordered_json {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, std::vector<Scalar>>) {
            nlohmann::ordered_json a = nlohmann::ordered_json::array();
            for (const auto& s : x) a.push_back(detail::scalar_json(s));
            return a;
          } else {
            return x;
          }
        },
        cfg.raw(key.path));
  }
  return root;
}

[[nodiscard]] inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  ExperimentConfig cfg;
  detail::flatten(j, "", cfg);
  return cfg;
}

/// Loads a TOML file, or the `config` member of a provenance.json.
[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    try {
      return config_from_json(j.contains("config") ? j.at("config") : j);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  ExperimentConfig cfg;
  apply_entries(cfg, parse_toml(ss.str(), path.string()), path.string());
  return cfg;
}

[[nodiscard]] inline ExperimentConfig load_config_text(std::string_view text, const std::string& source = "<config>") {
  ExperimentConfig cfg;
  apply_entries(cfg, parse_toml(text, source), source);
  return cfg;
}

// ---------------------------------------------------------------------------
// Conversion to library types. Domain validation errors are reported as
// configuration errors naming the key involved.

namespace detail {

template <class F>
auto as_config_error(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const UnsupportedCalibration& e) {
    throw ConfigError(std::string("noise.target_variance: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace detail

[[nodiscard]] inline TaskConfig task_config(const ExperimentConfig& c) {
  return detail::as_config_error([&] {
    TaskConfig t;
    t.d = c.get_size("task.d");
    t.k = c.get_size("task.k");
    t.seed = c.get_uint("task.seed");
    const std::string& prior = c.get_string("prior.kind");
    if (prior == "gaussian") t.prior = GaussianPrior{c.get_real("prior.gaussian.sigma")};
    else if (prior == "laplace") t.prior = LaplacePrior{c.get_real("prior.laplace.b")};
    else if (prior == "exponential") t.prior = ExponentialPrior{c.get_real("prior.exponential.lambda")};
    else if (prior == "unit_sphere") t.prior = UnitSpherePrior{};
    else throw ConfigError("prior.kind: unknown prior '" + prior + "'");

    const std::string& feat = c.get_string("features.kind");
    if (feat == "iid_gaussian") t.features = IidGaussianFeatures{};
    else if (feat == "gamma") t.features = GammaFeatures{c.get_real("features.gamma.alpha"), c.get_real("features.gamma.theta")};
    else if (feat == "var1") t.features = Var1Features{c.get_real("features.var1.rho"), c.get_real("features.var1.sigma_innov")};
    else throw ConfigError("features.kind: unknown feature process '" + feat + "'");

    const std::string& noise = c.get_string("noise.kind");
    NoiseModel nm;
    nm.scale = c.get_real("noise.scale");
    if (noise == "none") nm.family = NoNoise{};
    else if (noise == "gaussian") nm.family = GaussianNoise{c.get_real("noise.gaussian.sigma")};
    else if (noise == "bernoulli") nm.family = BernoulliNoise{c.get_real("noise.bernoulli.p")};
    else if (noise == "exponential") nm.family = ExponentialNoise{c.get_real("noise.exponential.lambda")};
    else if (noise == "gamma") nm.family = GammaNoise{c.get_real("noise.gamma.alpha"), c.get_real("noise.gamma.theta")};
    else if (noise == "poisson") nm.family = PoissonNoise{c.get_real("noise.poisson.lambda")};
    else if (noise == "student_t") nm.family = StudentTNoise{c.get_real("noise.student_t.nu")};
    else throw ConfigError("noise.kind: unknown noise family '" + noise + "'");
    const double tv = c.get_real("noise.target_variance");
    if (tv < 0.0) throw ConfigError("noise.target_variance must be >= 0");
    if (tv > 0.0) nm = calibrate_noise(nm, tv);
    t.noise = nm;
    t.validate();
    return t;
  });
}

[[nodiscard]] inline ModelConfig model_config(const ExperimentConfig& c) {
  return detail::as_config_error([&] {
    ModelConfig m;
    m.d_model = c.get_size("model.d_model");
    m.n_layers = c.get_size("model.n_layers");
    m.n_heads = c.get_size("model.n_heads");
    m.d_input = c.get_size("task.d");
    const std::size_t d = m.d_input;
    const std::size_t k = c.get_size("task.k");
    m.max_seq = c.get_size("model.max_seq");
    if (m.max_seq == 0) m.max_seq = std::max(4 * d + 3, 2 * k + 1);
    m.loss = parse_loss_kind(c.get_string("model.loss"));
    m.validate();
    return m;
  });
}

[[nodiscard]] inline TrainConfig train_config(const ExperimentConfig& c) {
  return detail::as_config_error([&] {
    TrainConfig t;
    t.model = model_config(c);
    t.task = task_config(c);
    t.batch_size = c.get_size("train.batch_size");
    t.total_steps = c.get_size("train.total_steps");
    t.lr = c.get_real("train.lr");
    t.eval_every = c.get_size("train.eval_every");
    t.checkpoint_every = c.get_size("train.checkpoint_every");
    t.seed = c.get_uint("train.seed");
    t.curriculum.enabled = c.get_bool("train.curriculum");
    t.curriculum.period = c.get_size("train.curriculum_period");
    t.curriculum.d_start = c.get_size("train.d_start");
    t.curriculum.k_start = c.get_size("train.k_start");
    t.curriculum.d_step = c.get_size("train.d_step");
    t.curriculum.k_step = c.get_size("train.k_step");
    t.validate();
    return t;
  });
}

[[nodiscard]] inline EvalSpec eval_spec(const ExperimentConfig& c) {
  return detail::as_config_error([&] {
    EvalSpec e;
    e.task = task_config(c);
    for (const auto& name : c.get_string_list("eval.methods")) {
      MethodSpec m;
      m.kind = parse_method(name);
      if (m.kind == MethodKind::ridge) m.alpha = c.get_real("eval.ridge_alpha");
      e.methods.push_back(m);
    }
    if (c.has("eval.k_values")) {
      e.k_values = c.get_size_list("eval.k_values");
    } else {
      for (std::size_t k = 1; k <= e.task.k; ++k) e.k_values.push_back(k);
    }
    e.n_trials = c.get_size("eval.n_trials");
    e.metric = parse_metric(c.get_string("eval.metric"));
    e.normalize = parse_normalize(c.get_string("eval.normalize"));
    e.n_boot = c.get_size("eval.n_boot");
    e.seed = c.get_uint("eval.seed");
    e.checkpoint = c.get_string("eval.checkpoint");
    e.l1.admm_penalty = c.get_real("eval.admm_penalty");
    e.l1.max_iter = c.get_size("eval.admm_max_iter");
    e.l1.primal_tol = c.get_real("eval.admm_tol");
    e.l1.dual_tol = e.l1.primal_tol;
    e.validate();
    return e;
  });
}

}  // namespace icl
