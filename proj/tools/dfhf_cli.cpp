#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dfhf/config.hpp"
#include "dfhf/correction.hpp"
#include "dfhf/sweep.hpp"
#include "dfhf/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dfhf;

namespace {

json report_json(const EnergyReport& r) {
  return {{"total", r.total},
          {"kinetic", r.kinetic},
          {"nuclear_attraction", r.nuclear_attraction},
          {"hartree_direct", r.hartree_direct},
          {"exchange", r.exchange},
          {"eigenvalues", std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size())},
          {"fermi", r.fermi},
          {"fermi_gap", json_number(r.fermi_gap)},
          {"delta_mass", r.delta_mass},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"flags", r.flags}};
}

void emit(const fs::path& out, const std::string& name, const json& j) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  fs::create_directories(out);
  std::ofstream(out / name) << j.dump(2) << '\n';
  std::cout << "wrote " << (out / name).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirac-Fock / Hartree-Fock plane-wave laboratory"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int workers = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--out", out_dir, "output directory (stdout when omitted, except for sweep)");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--workers", workers, "worker threads (sweep points, verify spectra)");
  };
  auto* hf_cmd = app.add_subcommand("hf", "Hartree-Fock ground state");
  auto* df_cmd = app.add_subcommand("df", "Dirac-Fock ground state at a single c");
  auto* corr_cmd = app.add_subcommand("correction", "leading-order correction and its decomposition");
  auto* sweep_cmd = app.add_subcommand("sweep", "c-sweep with slope fits (sweep.csv, summary.json)");
  auto* verify_cmd = app.add_subcommand("verify", "random-sample inequality suite");
  for (auto* s : {hf_cmd, df_cmd, corr_cmd, sweep_cmd, verify_cmd}) add_common(s);
  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg = config_path.empty() ? config_from_json(json::object()) : load_config(config_path);
    if (seed != 0) cfg.seed = seed;
    if (workers > 0) cfg.workers = workers;
    const fs::path out = out_dir;

    if (hf_cmd->parsed()) {
      const System sys(cfg.params(cfg.single_c()));
      const HfResult hf = solve_hf(sys, cfg.scf);
      emit(out, "hf.json", {{"config", config_to_json(cfg)}, {"report", report_json(hf.report)}});
      return hf.report.converged ? 0 : 2;
    }
    if (df_cmd->parsed()) {
      const double c = cfg.single_c();
      const System sys(cfg.params(c));
      const HfResult hf = solve_hf(sys, cfg.scf);
      DfOptions opt;
      opt.initial = renormalize(hf.gamma, c, Direction::ToRelativistic).exact;
      const DfGroundState df = solve_df(sys, cfg.scf, opt);
      emit(out, "df.json",
           {{"config", config_to_json(cfg)},
            {"c", c},
            {"report", report_json(df.report)},
            {"fermi_unshifted", df.fermi_unshifted},
            {"projector_residual", json_number(df.projector_residual)},
            {"hf_energy", hf.report.total},
            {"gap", df.report.total - hf.report.total}});
      return df.report.converged ? 0 : 2;
    }
    if (corr_cmd->parsed()) {
      const double c = cfg.single_c();
      const System sys(cfg.params(c));
      const HfResult hf = solve_hf(sys, cfg.scf);
      const CorrectionReport r = e2_total(sys, hf.gamma, hf.orbital_eigenvalues, c);
      emit(out, "correction.json",
           {{"config", config_to_json(cfg)},
            {"c", c},
            {"hf_energy", hf.report.total},
            {"e2_total", r.e2_total},
            {"e2_eigen_term", r.e2_eigen_term},
            {"e2_direct_term", r.e2_direct_term},
            {"e2_exchange_term", r.e2_exchange_term},
            {"e_mv", r.e_mv},
            {"e_d", r.e_d},
            {"e_so", r.e_so},
            {"consistency_residual", r.consistency_residual},
            {"relative_residual", r.consistency_residual / std::abs(4.0 * c * c * r.e2_total)}});
      return 0;
    }
    if (sweep_cmd->parsed()) {
      const SweepResult s = run_sweep(cfg);
      const fs::path dir = out.empty() ? fs::path("sweep_out") : out;
      write_sweep_outputs(dir, cfg, s);
      std::cout << "wrote " << (dir / "sweep.csv").string() << " and " << (dir / "summary.json").string() << '\n';
      bool ok = true;
      for (const auto& l : sweep_acceptance(s, cfg.retraction.tol)) {
        std::printf("%-28s %s  %s\n", l.id.c_str(), l.pass ? "PASS" : "FAIL", l.detail.c_str());
        ok = ok && l.pass;
      }
      return ok ? 0 : 1;
    }
    if (verify_cmd->parsed()) {
      const VerifyReport rep = verify_suite(cfg);
      emit(out, "verify.json", verify_json(cfg, rep));
      for (const auto& r : rep.checks)
        std::fprintf(stderr, "%-20s %-5s worst %.6g slack %.6g %s\n", r.name.c_str(), r.cls.c_str(), r.worst_ratio,
                     r.slack, r.pass ? "PASS" : "FAIL");
      return rep.all_pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
