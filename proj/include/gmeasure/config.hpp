#ifndef GMEASURE_CONFIG_HPP
#define GMEASURE_CONFIG_HPP

// Experiment configuration: a single JSON document with a versioned schema.
// Variation sequences may be given as closed-form decays or explicit
// arrays; g-functions as probability tables or logistic families.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmeasure/blockvar.hpp"
#include "gmeasure/coupling.hpp"
#include "gmeasure/symbolic.hpp"

namespace gmeasure {

inline constexpr const char* kConfigSchema = "gmeasure-config/1";
inline constexpr const char* kReportSchema = "gmeasure-report/1";

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what) {}
};

struct HorizonConfig {
  long terms = 1000000;   // series horizon for condition checks
  long steps = 10000;     // simulation steps per trial
  long trials = 100;
};

struct BlocksConfig {
  BlockStrategy strategy = BlockStrategy::unit;
  double c = 2.0;              // geometric
  std::size_t levels = 10;     // M
  std::vector<long> manual_b;  // manual
};

enum class RatesSource { from_rho, from_s, manual };

struct RatesConfig {
  RatesSource source = RatesSource::from_s;
  std::vector<double> manual_r;
  double margin = 0.0;  // additive slack on from_rho rates
};

struct ExperimentConfig {
  std::optional<GFunction> g;
  std::optional<GFunction> g_tilde;
  std::optional<VariationModel> variations;
  BlocksConfig blocks;
  RatesConfig rates;
  HorizonConfig horizons;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string condition_kind = "main";  // square | berbee_eps | main
  double epsilon = 0.0;
  InitialPasts initial = InitialPasts::adversarial;
  int hellinger_B_max = 3;
  int hellinger_b_max = 3;
  int iterate_steps = 20;
  int iterate_depth = 12;
  nlohmann::json raw;  // canonical source for the digest
};

namespace detail {

inline double require_finite(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a finite number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

inline GFunction parse_g(const nlohmann::json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError(field, "expected an object with 'kind'");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "table") {
    int alpha = j.value("alphabet", 2);
    int memory = j.at("memory").get<int>();
    std::vector<double> vals;
    for (const auto& v : j.at("values"))
      vals.push_back(require_finite(v, field + ".values"));
    return GFunction::table(Alphabet(alpha), memory, std::move(vals));
  }
  if (kind == "logistic") {
    double bias = require_finite(j.value("bias", nlohmann::json(0.0)),
                                 field + ".bias");
    std::vector<double> couplings;
    for (const auto& v : j.at("couplings"))
      couplings.push_back(require_finite(v, field + ".couplings"));
    return GFunction::logistic(bias, std::move(couplings));
  }
  throw ConfigError(field + ".kind", "unknown g kind '" + kind + "'");
}

inline VariationModel parse_variations(const nlohmann::json& j,
                                       const std::string& field) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "power")
    return VariationModel::power(require_finite(j.at("K"), field + ".K"),
                                 require_finite(j.at("alpha"), field + ".alpha"));
  if (kind == "geometric")
    return VariationModel::geometric(
        require_finite(j.at("K"), field + ".K"),
        require_finite(j.at("gamma"), field + ".gamma"));
  if (kind == "explicit") {
    VariationSequence vs;
    for (const auto& v : j.at("values")) {
      vs.values.push_back(require_finite(v, field + ".values"));
      vs.provenance.push_back(Provenance::exact);
    }
    return VariationModel::explicit_seq(std::move(vs),
                                        j.value("zero_beyond", true));
  }
  throw ConfigError(field + ".kind", "unknown variation kind '" + kind + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  if (j.value("schema", std::string{}) != kConfigSchema)
    throw ConfigError("schema", std::string("expected '") + kConfigSchema + "'");
  ExperimentConfig cfg;
  cfg.raw = j;
  if (j.contains("g")) cfg.g = detail::parse_g(j.at("g"), "g");
  if (j.contains("g_tilde"))
    cfg.g_tilde = detail::parse_g(j.at("g_tilde"), "g_tilde");
  if (j.contains("variations"))
    cfg.variations = detail::parse_variations(j.at("variations"), "variations");

  if (j.contains("blocks")) {
    const auto& b = j.at("blocks");
    std::string strat = b.value("strategy", std::string("unit"));
    if (strat == "geometric") {
      cfg.blocks.strategy = BlockStrategy::geometric;
      cfg.blocks.c = detail::require_finite(b.at("c"), "blocks.c");
    } else if (strat == "tail") {
      cfg.blocks.strategy = BlockStrategy::tail;
    } else if (strat == "unit") {
      cfg.blocks.strategy = BlockStrategy::unit;
    } else if (strat == "manual") {
      cfg.blocks.strategy = BlockStrategy::manual;
      for (const auto& v : b.at("b"))
        cfg.blocks.manual_b.push_back(v.get<long>());
    } else {
      throw ConfigError("blocks.strategy", "unknown strategy '" + strat + "'");
    }
    cfg.blocks.levels = b.value("M", std::size_t(10));
  }

  if (j.contains("rates")) {
    const auto& r = j.at("rates");
    std::string src = r.value("source", std::string("from_s"));
    if (src == "from_rho")
      cfg.rates.source = RatesSource::from_rho;
    else if (src == "from_s")
      cfg.rates.source = RatesSource::from_s;
    else if (src == "manual")
      cfg.rates.source = RatesSource::manual;
    else
      throw ConfigError("rates.source", "unknown source '" + src + "'");
    if (r.contains("r"))
      for (const auto& v : r.at("r"))
        cfg.rates.manual_r.push_back(detail::require_finite(v, "rates.r"));
    cfg.rates.margin =
        detail::require_finite(r.value("margin", nlohmann::json(0.0)),
                               "rates.margin");
  }

  if (j.contains("horizons")) {
    const auto& h = j.at("horizons");
    cfg.horizons.terms = h.value("terms", cfg.horizons.terms);
    cfg.horizons.steps = h.value("steps", cfg.horizons.steps);
    cfg.horizons.trials = h.value("trials", cfg.horizons.trials);
  }
  if (j.contains("seed")) {
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.seed_given = true;
  }
  if (j.contains("condition")) {
    const auto& c = j.at("condition");
    cfg.condition_kind = c.value("kind", std::string("main"));
    if (cfg.condition_kind != "square" && cfg.condition_kind != "berbee_eps" &&
        cfg.condition_kind != "main")
      throw ConfigError("condition.kind", "expected square|berbee_eps|main");
    cfg.epsilon = detail::require_finite(
        c.value("epsilon", nlohmann::json(0.0)), "condition.epsilon");
  }
  if (j.contains("initial")) {
    std::string k = j.at("initial").get<std::string>();
    if (k == "adversarial")
      cfg.initial = InitialPasts::adversarial;
    else if (k == "uniform")
      cfg.initial = InitialPasts::uniform;
    else if (k == "stationary")
      cfg.initial = InitialPasts::stationary;
    else
      throw ConfigError("initial", "expected adversarial|uniform|stationary");
  }
  if (j.contains("hellinger")) {
    cfg.hellinger_B_max = j.at("hellinger").value("B_max", 3);
    cfg.hellinger_b_max = j.at("hellinger").value("b_max", 3);
  }
  if (j.contains("iterate")) {
    cfg.iterate_steps = j.at("iterate").value("steps", 20);
    cfg.iterate_depth = j.at("iterate").value("depth", 12);
  }
  return cfg;
}

// FNV-1a over the canonical (sorted-key) dump; reports embed it so a run can
// be reproduced from the config alone.
inline std::string config_digest(const nlohmann::json& j) {
  std::string dump = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace gmeasure

#endif  // GMEASURE_CONFIG_HPP
