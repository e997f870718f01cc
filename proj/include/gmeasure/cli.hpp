#ifndef GMEASURE_CLI_HPP
#define GMEASURE_CLI_HPP

// Subcommand dispatch behind the gmeasure binary.  Everything here is
// deterministic for a fixed config + seed: reports carry no timestamps and
// embed a config digest sufficient to reproduce the run.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gmeasure/blockvar.hpp"
#include "gmeasure/config.hpp"
#include "gmeasure/coupling.hpp"
#include "gmeasure/renewal.hpp"

namespace gmeasure {

// Exit codes: 0 holds/success, 1 fails, 2 inconclusive, 3 invalid input.
enum ExitCode : int {
  kExitHolds = 0,
  kExitFails = 1,
  kExitInconclusive = 2,
  kExitInvalidInput = 3,
};

struct DispatchResult {
  nlohmann::json report;
  std::vector<std::pair<std::string, std::string>> csv_files;  // name, body
  int exit_code = kExitHolds;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* status_name(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::holds_at_horizon: return "holds_at_horizon";
    case VerdictStatus::fails: return "fails";
    case VerdictStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

inline int status_exit(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::holds_at_horizon: return kExitHolds;
    case VerdictStatus::fails: return kExitFails;
    case VerdictStatus::inconclusive: return kExitInconclusive;
  }
  return kExitInvalidInput;
}

inline nlohmann::json verdict_json(const ConditionVerdict& v) {
  nlohmann::json j;
  j["status"] = status_name(v.status);
  j["horizon"] = v.horizon;
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [k, val] : v.witness) w[k] = val;
  j["witness"] = w;
  if (!v.violated.empty()) j["violated"] = v.violated;
  return j;
}

inline unsigned worker_threads() {
  if (const char* env = std::getenv("GMEASURE_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return unsigned(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? hc : 1;
}

// The variation model the run works from: explicit when the config gives
// one, otherwise derived exactly from a table g (zero beyond the memory).
inline VariationModel effective_variations(const ExperimentConfig& cfg) {
  if (cfg.variations) return *cfg.variations;
  if (cfg.g && cfg.g->kind() == GKind::table)
    return VariationModel::explicit_seq(
        variation_sequence(*cfg.g, cfg.g->memory() + 1), true);
  if (cfg.g) {
    // Truncated logistic: explicit upper bounds out to the depth, zero
    // beyond only when no coupling tail was declared.
    return VariationModel::explicit_seq(
        variation_sequence(*cfg.g, cfg.g->depth() + 1),
        cfg.g->truncation_slack() == 0.0);
  }
  throw ConfigError("variations", "needed when no g is given");
}

inline BlockVariationPair build_pair(const ExperimentConfig& cfg) {
  VariationModel vars = effective_variations(cfg);
  BlockStructure blocks =
      cfg.blocks.strategy == BlockStrategy::manual
          ? BlockStructure(cfg.blocks.manual_b)
          : make_blocks(cfg.blocks.strategy, cfg.blocks.c, vars,
                        cfg.blocks.levels);
  switch (cfg.rates.source) {
    case RatesSource::manual: {
      if (cfg.rates.manual_r.size() != blocks.levels())
        throw ConfigError("rates.r", "length must match the number of levels");
      BlockVariationPair pair;
      pair.blocks = blocks;
      pair.r = cfg.rates.manual_r;
      pair.provenance = RateProvenance::manual;
      return pair;
    }
    case RatesSource::from_s:
      return r_from_variations(vars.sequence(blocks.total()), blocks);
    case RatesSource::from_rho: {
      if (!cfg.g) throw ConfigError("g", "rates.source=from_rho needs a g");
      BlockVariationPair pair;
      pair.blocks = blocks;
      pair.provenance = RateProvenance::from_rho;
      for (std::size_t l = 0; l < blocks.levels(); ++l)
        pair.r.push_back(
            rho_block(*cfg.g, int(blocks.B[l]), int(blocks.b[l])).exact +
            cfg.rates.margin);
      return pair;
    }
  }
  throw ConfigError("rates.source", "unreachable");
}

}  // namespace detail

inline DispatchResult dispatch(const std::string& command,
                               const ExperimentConfig& cfg) {
  DispatchResult out;
  out.report["schema"] = kReportSchema;
  out.report["command"] = command;
  out.report["config_digest"] = config_digest(cfg.raw);

  auto need_seed = [&] {
    if (!cfg.seed_given)
      throw ConfigError("seed", "mandatory for stochastic commands");
    out.report["seed"] = cfg.seed;
  };

  if (command == "check") {
    VariationModel vars = detail::effective_variations(cfg);
    ConditionParams prm;
    prm.epsilon = cfg.epsilon;
    ConditionVerdict v;
    if (cfg.condition_kind == "square") {
      v = check_square(vars, prm, cfg.horizons.terms);
    } else if (cfg.condition_kind == "berbee_eps") {
      v = check_berbee(vars, prm, cfg.horizons.terms);
    } else {
      BlockVariationPair pair = detail::build_pair(cfg);
      v = check_main(pair, prm);
      if (cfg.g) {
        ValidityReport rep = validity_report(*cfg.g, pair);
        nlohmann::json vr;
        vr["all_valid"] = rep.all_valid;
        vr["first_all_valid"] = rep.first_all_valid;
        vr["rho"] = rep.rho;
        out.report["validity"] = vr;
      }
    }
    out.report["condition"] = cfg.condition_kind;
    out.report["verdict"] = detail::verdict_json(v);
    out.exit_code = detail::status_exit(v.status);
    return out;
  }

  if (command == "blocks") {
    BlockVariationPair pair = detail::build_pair(cfg);
    std::ostringstream csv;
    csv << "ell,B_ell,b_ell,s_ell,r_ell,delta_bar_prefix\n";
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t l = 0; l < pair.blocks.levels(); ++l) {
      double sl = l < pair.s.size() ? pair.s[l] : 0.0;
      double db = delta_bar(pair, l + 1);
      csv << (l + 1) << ',' << pair.blocks.B[l + 1] << ',' << pair.blocks.b[l]
          << ',' << detail::fmt17(sl) << ',' << detail::fmt17(pair.r[l]) << ','
          << detail::fmt17(db) << "\n";
      rows.push_back({{"ell", l + 1},
                      {"B_ell", pair.blocks.B[l + 1]},
                      {"b_ell", pair.blocks.b[l]},
                      {"s_ell", sl},
                      {"r_ell", pair.r[l]},
                      {"delta_bar_prefix", db}});
    }
    out.report["levels"] = rows;
    out.report["delta_bar"] = delta_bar(pair);
    out.csv_files.emplace_back("blocks.csv", csv.str());
    return out;
  }

  if (command == "renewal") {
    BlockVariationPair pair = detail::build_pair(cfg);
    RenewalSpec spec = build_spec(pair);
    long N = std::max(cfg.horizons.terms, pair.blocks.total());
    RenewalSolution sol = renewal_exact(spec, N);
    std::ostringstream csv;
    csv << "n,A_n\n";
    for (std::size_t n = 0; n < sol.A.size(); ++n)
      csv << n << ',' << detail::fmt17(sol.A[n]) << "\n";
    out.csv_files.emplace_back("renewal.csv", csv.str());
    out.report["limit"] = sol.limit;
    out.report["tail_gap"] = sol.tail_gap;
    out.report["delta_bar"] = delta_bar(pair);
    out.report["expected_T1"] = spec.expected_T1;
    out.report["sum_a"] = spec.sum_a;
    return out;
  }

  if (command == "couple") {
    need_seed();
    if (!cfg.g) throw ConfigError("g", "couple needs a g");
    const GFunction& g = *cfg.g;
    const GFunction& g2 = cfg.g_tilde ? *cfg.g_tilde : g;
    BlockVariationPair pair = detail::build_pair(cfg);
    DbarEstimate est =
        estimate_dbar(g, g2, pair, cfg.horizons.steps, cfg.horizons.trials,
                      cfg.seed, cfg.initial, detail::worker_threads());
    out.report["estimate"] = est.estimate;
    out.report["band"] = est.band;
    out.report["ceiling"] = est.ceiling;
    out.report["sup_log_gap"] = est.s;
    out.report["trials"] = est.trials;
    out.report["steps"] = cfg.horizons.steps;
    out.report["validity_violations"] = est.validity_violations;
    out.exit_code = kExitHolds;
    return out;
  }

  if (command == "hellinger") {
    if (!cfg.g) throw ConfigError("g", "hellinger needs a g");
    std::ostringstream csv;
    csv << "B,b,h,rho_exact,bound_log,bound_sqrt,bound_w\n";
    nlohmann::json rows = nlohmann::json::array();
    for (int B = 0; B <= cfg.hellinger_B_max; ++B)
      for (int b = 1; b <= cfg.hellinger_b_max; ++b) {
        double h = h_block(*cfg.g, B, b);
        RhoBlock rho = rho_block(*cfg.g, B, b);
        csv << B << ',' << b << ',' << detail::fmt17(h) << ','
            << detail::fmt17(rho.exact) << ',' << detail::fmt17(rho.bound_log)
            << ',' << detail::fmt17(rho.bound_sqrt) << ','
            << detail::fmt17(rho.bound_w) << "\n";
        rows.push_back({{"B", B},
                        {"b", b},
                        {"h", h},
                        {"rho_exact", rho.exact},
                        {"bound_log", rho.bound_log},
                        {"bound_sqrt", rho.bound_sqrt},
                        {"bound_w", rho.bound_w}});
      }
    out.report["table"] = rows;
    out.csv_files.emplace_back("hellinger.csv", csv.str());
    return out;
  }

  if (command == "iterate") {
    if (!cfg.g) throw ConfigError("g", "iterate needs a g");
    if (cfg.g->kind() != GKind::table)
      throw ConfigError("g.kind", "iterate needs a table g (exact adjoint)");
    const Alphabet& a = cfg.g->alphabet();
    int d = std::max(cfg.g->memory(), 1);
    Word w1(std::size_t(d), 0), w2(std::size_t(d), 0);
    w1[0] = a.size - 1;  // adversarial point masses differing at coordinate 0
    CylinderMeasure nu1 = CylinderMeasure::point_mass(a, w1);
    CylinderMeasure nu2 = CylinderMeasure::point_mass(a, w2);
    AttractorSeries series = iterate_attractor(*cfg.g, nu1, nu2,
                                               cfg.iterate_steps,
                                               cfg.iterate_depth);
    std::ostringstream csv;
    csv << "n,d_w\n";
    for (std::size_t n = 0; n < series.distances.size(); ++n)
      csv << (n + 1) << ',' << detail::fmt17(series.distances[n]) << "\n";
    out.csv_files.emplace_back("iterate.csv", csv.str());
    out.report["distances"] = series.distances;
    out.report["resolution"] = series.resolution;
    return out;
  }

  throw ConfigError("command", "unknown command '" + command + "'");
}

inline void write_outputs(const DispatchResult& res,
                          const std::optional<std::string>& out_dir) {
  if (!out_dir) return;
  std::filesystem::create_directories(*out_dir);
  {
    std::ofstream f(*out_dir + "/report.json");
    f << res.report.dump(2) << "\n";
  }
  for (const auto& [name, body] : res.csv_files) {
    std::ofstream f(*out_dir + "/" + name);
    f << body;
  }
}

}  // namespace gmeasure

#endif  // GMEASURE_CLI_HPP
