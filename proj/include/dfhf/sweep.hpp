#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "correction.hpp"
#include "df.hpp"
#include "hf.hpp"
#include "renorm.hpp"

namespace dfhf {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SweepRow {
  double c = kNaN;
  double E_hf = kNaN;
  double E_df = kNaN;
  double e2 = kNaN;
  double gap1 = kNaN;
  double gap2 = kNaN;
  double e2_tilde = kNaN;
  double E_retracted = kNaN;
  int retraction_iterations = -1;
  double delta_mass = kNaN;
  double fermi_gap_hf = kNaN;
  double fermi_gap_df = kNaN;
  double wall_time = kNaN;  // seconds; kept out of the CSV so reruns compare bitwise
  std::string status = "pending";
  std::string retraction_status;
  double R = kNaN;
  double L_c = kNaN;
  double max_ratio = kNaN;
  double retraction_residual = kNaN;
  double E_tc_limit = kNaN;  // T_c iterated to its limit whether or not 2 a_c R < 1
  int tc_iterations = -1;
  double projector_residual = kNaN;
  int df_iterations = -1;
};

struct SlopeFit {
  bool available = false;
  std::string note;
  int points = 0;
  double slope = kNaN;
  double intercept = kNaN;
  double std_error = kNaN;
  double r2 = kNaN;
};

// Ordinary least squares of log|y| on log x. Points with y == 0 or NaN are skipped.
inline SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  SlopeFit f;
  std::vector<double> lx, ly;
  int zeros = 0;
  for (size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!std::isfinite(y[i]) || !(x[i] > 0.0)) continue;
    if (y[i] == 0.0) {
      ++zeros;
      continue;
    }
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  f.points = static_cast<int>(lx.size());
  if (f.points == 0 && zeros > 0) {
    f.note = "exact zero at every point";
    return f;
  }
  if (f.points < 3) {
    f.note = "fewer than 3 usable points";
    return f;
  }
  const double n = f.points;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < f.points; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < f.points; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 0.0) {
    f.note = "x values do not vary";
    return f;
  }
  f.available = true;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (int i = 0; i < f.points; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    sse += r * r;
  }
  f.std_error = f.points > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : kNaN;
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

struct HfSummary {
  double energy = kNaN;
  double fermi_gap = kNaN;
  int iterations = 0;
  bool converged = false;
  double x2_norm = kNaN;
  double R0 = kNaN;
  std::vector<std::string> flags;
  double wall_time = kNaN;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  HfSummary hf;
  CorrectionReport correction;  // evaluated at c = 1, so e2 at c is correction.e2_total / c^2
  double decomposition_relative_residual = kNaN;
  SlopeFit gap1_fit;
  SlopeFit gap2_fit;
  SlopeFit chain_fit;     // E_retracted - E_hf - e2
  SlopeFit tc_chain_fit;  // same with E_tc_limit, informational
};

namespace detail {

inline bool is_pure(const DensityMatrix& g) {
  for (int n = 0; n < g.rank(); ++n)
    if (std::abs(g.occupations()[n] - 1.0) > 1e-10) return false;
  return true;
}

// Differences below 1e-15 max(1, |E|) are rounding noise (the free case
// gives ~1e-22) and are recorded as exact zeros.
inline double snap_zero(double d, double e) { return std::abs(d) <= 1e-15 * std::max(1.0, std::abs(e)) ? 0.0 : d; }

// Renormalized S_c embedding of the HF state. An open HF shell has no
// renormalization; its orbitals are embedded with their occupations kept.
inline DensityMatrix relativistic_start(const DensityMatrix& hf, double c) {
  if (is_pure(hf)) return renormalize(hf, c, Direction::ToRelativistic).exact;
  Eigen::MatrixXcd v(2 * hf.dim(), hf.rank());
  for (int n = 0; n < hf.rank(); ++n) v.col(n) = spinor_map(SpinorMap::S_c, hf.orbital(n), c).values();
  return compress(hf.lattice_ptr(), 4, v, hf.occupations().cast<cplx>().asDiagonal());
}

// One c value of the sweep, given the HF data. Never throws; failures land in status.
inline SweepRow sweep_point(const Config& cfg, double c, const HfResult& hf, const HfSummary& hs,
                            const CorrectionReport& corr) {
  SweepRow row;
  row.c = c;
  row.E_hf = hf.report.total;
  row.fermi_gap_hf = hf.report.fermi_gap;
  row.e2 = corr.e2_total / (c * c);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const System sys(cfg.params(c, hf.gamma.lattice_ptr()));
    const DensityMatrix embedded = relativistic_start(hf.gamma, c);
    DfOptions opt;
    opt.initial = embedded;
    const DfGroundState df = solve_df(sys, cfg.scf, opt);
    row.E_df = df.report.total;
    row.gap1 = snap_zero(row.E_df - row.E_hf, row.E_hf);
    row.gap2 = snap_zero(row.gap1 - row.e2, row.E_hf);
    row.delta_mass = df.report.delta_mass;
    row.fermi_gap_df = df.report.fermi_gap;
    row.projector_residual = df.projector_residual;
    row.df_iterations = df.report.iterations;
    if (df.report.delta_mass == 0.0)
      row.e2_tilde = e2_tilde_df(sys, df.gamma, df.orbital_eigenvalues, c);
    row.status = df.report.converged ? "ok" : "df not converged";

    try {
      const DensityMatrix start = free_sandwich(embedded, c, Sign::Plus);
      row.R = cfg.retraction.R ? *cfg.retraction.R : hs.R0;
      row.L_c = sys.params.L_c(row.R);
      const auto [lim, tr] = iterate_tc(sys, start, c, cfg.retraction.tol, cfg.retraction.max_iter);
      row.E_tc_limit = df_energy(sys, lim, c).total;
      row.tc_iterations = tr.iterations;
      if (!(row.L_c < 1.0)) {
        row.retraction_status = "n/a: 2 a_c R >= 1";
      } else {
        row.retraction_iterations = tr.iterations;
        row.E_retracted = row.E_tc_limit;
        row.retraction_residual = tr.final_residual;
        row.max_ratio = 0.0;
        for (double r : tr.ratios) row.max_ratio = std::max(row.max_ratio, r);
        if (tr.non_contraction)
          row.retraction_status = "non-contraction";
        else if (!tr.converged)
          row.retraction_status = "not converged";
        else
          row.retraction_status = "ok";
      }
    } catch (const std::exception& e) {
      row.retraction_status = std::string("error: ") + e.what();
    }
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace detail

inline SweepResult run_sweep(const Config& cfg) {
  require(cfg.c_values.size() >= 3, "run_sweep: at least 3 c values required");
  const auto [cmin, cmax] = std::minmax_element(cfg.c_values.begin(), cfg.c_values.end());
  require(*cmax >= 4.0 * *cmin, "run_sweep: c values must span at least a factor 4");
  SweepResult out;
  const auto t0 = std::chrono::steady_clock::now();
  const System sys(cfg.params(cfg.c_values.front()));
  const HfResult hf = solve_hf(sys, cfg.scf);
  out.hf.energy = hf.report.total;
  out.hf.fermi_gap = hf.report.fermi_gap;
  out.hf.iterations = hf.report.iterations;
  out.hf.converged = hf.report.converged;
  out.hf.flags = hf.report.flags;
  out.hf.x2_norm = matrix_norm(hf.gamma, XNorm{2.0});
  out.hf.R0 = r0_bound(cfg.q, cfg.nuclear.z, out.hf.x2_norm);
  const bool open_shell = !detail::is_pure(hf.gamma);
  if (open_shell) out.hf.flags.push_back("fractional HF occupations: e2 uses occupation-weighted orbitals");
  out.correction = e2_total(sys, hf.gamma, hf.orbital_eigenvalues, 1.0, true, open_shell);
  out.decomposition_relative_residual = out.correction.consistency_residual / std::abs(4.0 * out.correction.e2_total);
  out.hf.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out.rows.resize(cfg.c_values.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < cfg.c_values.size(); i = next++)
      out.rows[i] = detail::sweep_point(cfg, cfg.c_values[i], hf, out.hf, out.correction);
  };
  const int nw = std::max(1, std::min<int>(cfg.workers, static_cast<int>(cfg.c_values.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
    worker();
  }

  std::vector<double> cs, g1, g2, ch, tch;
  for (const auto& r : out.rows) {
    if (r.status != "ok") continue;
    cs.push_back(r.c);
    g1.push_back(r.gap1);
    g2.push_back(r.gap2);
    ch.push_back(r.E_retracted - r.E_hf - r.e2);
    tch.push_back(r.E_tc_limit - r.E_hf - r.e2);
  }
  out.gap1_fit = fit_loglog(cs, g1);
  out.gap2_fit = fit_loglog(cs, g2);
  out.chain_fit = fit_loglog(cs, ch);
  out.tc_chain_fit = fit_loglog(cs, tch);
  return out;
}

// ------------------------------------------------------------------ output

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline const char* sweep_csv_header() {
  return "c,E_hf,E_df,e2,gap1,gap2,e2_tilde,E_retracted,retraction_iterations,delta_mass,fermi_gap_hf,"
         "fermi_gap_df,status,retraction_status,R,L_c,max_ratio,retraction_residual,E_tc_limit,tc_iterations,"
         "projector_residual,df_iterations";
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << sweep_csv_header() << '\n';
  for (const auto& r : rows) {
    const auto d = [](double v) { return format_double(v); };
    os << d(r.c) << ',' << d(r.E_hf) << ',' << d(r.E_df) << ',' << d(r.e2) << ',' << d(r.gap1) << ',' << d(r.gap2)
       << ',' << d(r.e2_tilde) << ',' << d(r.E_retracted) << ',' << r.retraction_iterations << ','
       << d(r.delta_mass) << ',' << d(r.fermi_gap_hf) << ',' << d(r.fermi_gap_df) << ',' << csv_quote(r.status)
       << ',' << csv_quote(r.retraction_status) << ',' << d(r.R) << ',' << d(r.L_c) << ',' << d(r.max_ratio) << ','
       << d(r.retraction_residual) << ',' << d(r.E_tc_limit) << ',' << r.tc_iterations << ','
       << d(r.projector_residual) << ',' << r.df_iterations << '\n';
  }
  return os.str();
}

// JSON has no NaN; missing values become null.
inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json fit_json(const SlopeFit& f) {
  return {{"available", f.available}, {"note", f.note},           {"points", f.points},
          {"slope", json_number(f.slope)}, {"std_error", json_number(f.std_error)}, {"r2", json_number(f.r2)},
          {"intercept", json_number(f.intercept)}};
}

struct AcceptanceLine {
  std::string id;
  bool pass = false;
  std::string detail;
};

// Thresholds of the sweep-based acceptance checks.
inline std::vector<AcceptanceLine> sweep_acceptance(const SweepResult& s, double retraction_tol) {
  std::vector<AcceptanceLine> out;
  {
    const auto& f = s.gap1_fit;
    AcceptanceLine l{"relativistic_effect_slope", f.available && f.slope >= -2.1 && f.slope <= -1.9 && f.r2 >= 0.999, ""};
    l.detail = "slope " + format_double(f.slope) + " r2 " + format_double(f.r2) + " (want [-2.1, -1.9], r2 >= 0.999)";
    out.push_back(l);
  }
  {
    const auto& f = s.gap2_fit;
    AcceptanceLine l{"correction_residual_slope", f.available && f.slope <= -2.8, ""};
    l.detail = "slope " + format_double(f.slope) + " (want <= -2.8)";
    out.push_back(l);
  }
  {
    bool ok = true;
    std::string why;
    int counted = 0;
    for (const auto& r : s.rows) {
      if (r.c < 60.0) continue;
      ++counted;
      if (r.retraction_status != "ok") {
        ok = false;
        why += " c=" + format_double(r.c) + ": " + r.retraction_status + " (L_c=" + format_double(r.L_c) + ");";
        continue;
      }
      if (!(r.max_ratio <= r.L_c + 0.05)) {
        ok = false;
        why += " c=" + format_double(r.c) + ": ratio " + format_double(r.max_ratio) + ";";
      }
      if (!(r.retraction_residual <= retraction_tol)) {
        ok = false;
        why += " c=" + format_double(r.c) + ": residual " + format_double(r.retraction_residual) + ";";
      }
    }
    const auto& f = s.chain_fit;
    if (!(f.available && f.slope <= -2.8)) {
      ok = false;
      why += " chain slope " + format_double(f.slope) + " (" + (f.available ? "want <= -2.8" : f.note) + ");";
    }
    if (counted == 0) {
      ok = false;
      why += " no c >= 60 in the sweep;";
    }
    AcceptanceLine l{"retraction_contract", ok, ok ? "all c >= 60 contract within L_c + 0.05" : why};
    l.detail += " [informational T_c-limit chain slope " + format_double(s.tc_chain_fit.slope) + "]";
    out.push_back(l);
  }
  {
    bool ok = true;
    std::string why;
    int counted = 0;
    for (const auto& r : s.rows) {
      if (r.c < 90.0 - 1e-9) continue;
      ++counted;
      if (!(r.delta_mass == 0.0 && r.fermi_gap_df > 0.0)) {
        ok = false;
        why += " c=" + format_double(r.c) + ": delta " + format_double(r.delta_mass) + " gap " +
               format_double(r.fermi_gap_df) + ";";
      }
    }
    if (counted == 0) {
      ok = false;
      why = " no c >= 90 in the sweep";
    }
    out.push_back({"filled_shell", ok, ok ? "delta_c = 0 and Fermi gap > 0 for every c >= 90" : why});
  }
  return out;
}

inline nlohmann::json sweep_summary(const Config& cfg, const SweepResult& s) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["hf"] = {{"energy", json_number(s.hf.energy)},
             {"fermi_gap", json_number(s.hf.fermi_gap)},
             {"iterations", s.hf.iterations},
             {"converged", s.hf.converged},
             {"x2_norm", json_number(s.hf.x2_norm)},
             {"R0", json_number(s.hf.R0)},
             {"flags", s.hf.flags},
             {"wall_time", json_number(s.hf.wall_time)}};
  const auto& k = s.correction;
  j["correction"] = {{"four_c2_e2", json_number(4.0 * k.e2_total)},
                     {"e_mv", json_number(k.e_mv)},
                     {"e_d", json_number(k.e_d)},
                     {"e_so", json_number(k.e_so)},
                     {"relative_residual", json_number(s.decomposition_relative_residual)}};
  j["slopes"] = {{"gap1", fit_json(s.gap1_fit)},
                 {"gap2", fit_json(s.gap2_fit)},
                 {"retraction_chain", fit_json(s.chain_fit)},
                 {"tc_limit_chain", fit_json(s.tc_chain_fit)}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"c", r.c},
                    {"status", r.status},
                    {"retraction_status", r.retraction_status},
                    {"wall_time", json_number(r.wall_time)},
                    {"e2_tilde_relative_gap",
                     json_number(std::abs(r.e2_tilde - r.e2) / std::abs(r.e2))}});
  j["rows"] = rows;
  nlohmann::json acc = nlohmann::json::object();
  for (const auto& l : sweep_acceptance(s, cfg.retraction.tol)) acc[l.id] = {{"pass", l.pass}, {"detail", l.detail}};
  j["acceptance"] = acc;
  return j;
}

inline void write_sweep_outputs(const std::filesystem::path& dir, const Config& cfg, const SweepResult& s) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "sweep.csv") << sweep_csv(s.rows);
  std::ofstream(dir / "summary.json") << sweep_summary(cfg, s).dump(2) << '\n';
}

}  // namespace dfhf
