#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "model.hpp"

namespace dfhf {

struct RetractionConfig {
  double tol = 1e-10;
  int max_iter = 50;
  std::optional<double> R;  // empty means "auto": R0 from ||gamma_HF||_{X^2}
};

struct VerifyConfig {
  std::vector<std::string> checks;  // empty runs every check
  int n_samples = 100;
  std::map<std::string, double> slacks{{"exact", 1.0 + 1e-9}, {"hardy", 2.0}};
  double c = 60.0;
  int n_gamma = 2;  // distinct states for the projector-based checks
};

struct Config {
  int n = 8;
  double box_length = 12.0;
  NuclearModel nuclear{2.0, 0.8};
  double q = 2.0;
  std::vector<double> c_values{40.0, 60.0, 90.0, 135.0, 200.0};
  std::optional<double> c;  // single-point subcommands; first sweep value otherwise
  ScfSettings scf;
  RetractionConfig retraction;
  VerifyConfig verify;
  std::uint64_t seed = 42;
  int workers = 1;

  double single_c() const { return c ? *c : c_values.front(); }

  // Reuses `lat` when given so states can move between systems.
  ModelParams params(double cval, LatticePtr lat = nullptr) const {
    ModelParams p;
    p.lattice = lat ? std::move(lat) : build_lattice(n, box_length);
    p.nuclear = nuclear;
    p.q = q;
    p.c = cval;
    return p;
  }
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline Config config_from_json(const nlohmann::json& j) {
  Config cfg;
  try {
    if (j.contains("lattice")) {
      detail::read_opt(j["lattice"], "n", cfg.n);
      detail::read_opt(j["lattice"], "box_length", cfg.box_length);
    }
    if (j.contains("nuclear")) {
      detail::read_opt(j["nuclear"], "z", cfg.nuclear.z);
      detail::read_opt(j["nuclear"], "sigma", cfg.nuclear.sigma);
    }
    if (j.contains("electrons")) detail::read_opt(j["electrons"], "q", cfg.q);
    if (j.contains("sweep")) detail::read_opt(j["sweep"], "c_values", cfg.c_values);
    if (j.contains("c")) cfg.c = j["c"].get<double>();
    if (j.contains("scf")) {
      const auto& s = j["scf"];
      detail::read_opt(s, "tol_energy", cfg.scf.tol_energy);
      detail::read_opt(s, "tol_density", cfg.scf.tol_density);
      detail::read_opt(s, "damping", cfg.scf.damping);
      detail::read_opt(s, "max_iter", cfg.scf.max_iter);
    }
    if (j.contains("retraction")) {
      const auto& r = j["retraction"];
      detail::read_opt(r, "tol", cfg.retraction.tol);
      detail::read_opt(r, "max_iter", cfg.retraction.max_iter);
      if (r.contains("R")) {
        if (r["R"].is_string()) {
          if (r["R"].get<std::string>() != "auto") throw InvalidArgument("retraction.R must be \"auto\" or a number");
        } else {
          cfg.retraction.R = r["R"].get<double>();
        }
      }
    }
    if (j.contains("verify")) {
      const auto& v = j["verify"];
      detail::read_opt(v, "checks", cfg.verify.checks);
      detail::read_opt(v, "n_samples", cfg.verify.n_samples);
      detail::read_opt(v, "c", cfg.verify.c);
      detail::read_opt(v, "n_gamma", cfg.verify.n_gamma);
      if (v.contains("slacks"))
        for (const auto& [k, val] : v["slacks"].items()) cfg.verify.slacks[k] = val.get<double>();
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  require(cfg.n >= 4 && cfg.n % 2 == 0, "config: lattice.n must be even and at least 4");
  require(cfg.box_length > 0.0, "config: lattice.box_length must be positive");
  require(cfg.nuclear.z >= 0.0 && cfg.nuclear.sigma > 0.0, "config: nuclear.z >= 0 and nuclear.sigma > 0 required");
  require(cfg.q > 0.0, "config: electrons.q must be positive");
  require(!cfg.c_values.empty(), "config: sweep.c_values is empty");
  for (double c : cfg.c_values) require(c > 0.0, "config: c values must be positive");
  require(cfg.scf.damping > 0.0 && cfg.scf.damping <= 1.0, "config: scf.damping must lie in (0, 1]");
  require(cfg.scf.max_iter > 0, "config: scf.max_iter must be positive");
  require(cfg.retraction.tol > 0.0 && cfg.retraction.max_iter > 0, "config: bad retraction settings");
  require(!cfg.retraction.R || *cfg.retraction.R > 0.0, "config: retraction.R must be positive");
  require(cfg.verify.n_samples > 0 && cfg.verify.n_gamma > 0, "config: verify sample counts must be positive");
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

inline nlohmann::json config_to_json(const Config& cfg) {
  nlohmann::json j;
  j["lattice"] = {{"n", cfg.n}, {"box_length", cfg.box_length}};
  j["nuclear"] = {{"z", cfg.nuclear.z}, {"sigma", cfg.nuclear.sigma}};
  j["electrons"] = {{"q", cfg.q}};
  j["sweep"] = {{"c_values", cfg.c_values}};
  if (cfg.c) j["c"] = *cfg.c;
  j["scf"] = {{"tol_energy", cfg.scf.tol_energy},
              {"tol_density", cfg.scf.tol_density},
              {"damping", cfg.scf.damping},
              {"max_iter", cfg.scf.max_iter}};
  j["retraction"] = {{"tol", cfg.retraction.tol}, {"max_iter", cfg.retraction.max_iter}};
  if (cfg.retraction.R)
    j["retraction"]["R"] = *cfg.retraction.R;
  else
    j["retraction"]["R"] = "auto";
  j["verify"] = {{"checks", cfg.verify.checks},
                 {"n_samples", cfg.verify.n_samples},
                 {"slacks", cfg.verify.slacks},
                 {"c", cfg.verify.c},
                 {"n_gamma", cfg.verify.n_gamma}};
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace dfhf
