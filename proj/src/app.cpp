#include "nhqb/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "nhqb/amplification.hpp"
#include "nhqb/errors.hpp"
#include "nhqb/quench.hpp"
#include "nhqb/spectral.hpp"
#include "nhqb/topology.hpp"

namespace nhqb {

namespace {

struct SchemaEntry {
  const char* key;
  const char* fallback;
  const char* help;
};

const std::vector<SchemaEntry>& schema() {
  static const std::vector<SchemaEntry> entries = {
      {"model.J", "1", "energy scale J > 0"},
      {"model.delta", "0.5", "asymmetry delta for single-point commands"},
      {"model.theta", "0.4", "non-Hermiticity theta >= 0"},
      {"model.regime", "real", "real | imaginary (amplify defaults to imaginary)"},
      {"model.boundary", "pbc", "pbc | obc"},
      {"model.cells", "40", "unit cells N for OBC spectra"},
      {"grid.k_points", "2001", "Brillouin-zone points for winding numbers"},
      {"grid.spectrum_k_points", "400", "Brillouin-zone points for PBC spectra"},
      {"grid.delta_min", "-0.9", "first delta of sweeps and scans"},
      {"grid.delta_max", "0.9", "last delta of sweeps and scans"},
      {"grid.delta_step", "0.05", "delta increment (> 0)"},
      {"grid.theta_min", "0", "first theta of the phase diagram"},
      {"grid.theta_max", "1", "last theta of the phase diagram"},
      {"grid.theta_step", "0.1", "theta increment (> 0)"},
      {"quench.J_i", "1", "initial J"},
      {"quench.delta_i", "-0.9", "initial delta"},
      {"quench.theta_i", "0", "initial theta"},
      {"quench.J_f", "1", "final J"},
      {"quench.delta_f", "0.9", "final delta"},
      {"quench.theta_f", "0.4", "final theta"},
      {"quench.k_per_half", "1000", "momenta per half zone"},
      {"quench.t_max", "12", "last time sample"},
      {"quench.t_samples", "800", "number of time samples"},
      {"quench.n_min", "0", "first Fisher-zero branch"},
      {"quench.n_max", "9", "last Fisher-zero branch"},
      {"quench.pgp_k_stride", "10", "momentum stride of the PGP grid dump"},
      {"quench.pgp_t_stride", "4", "time stride of the PGP grid dump"},
      {"amplify.cells", "10", "unit cells N of the susceptibility chain"},
  };
  return entries;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key " + key + " expects a number, got '" + text + "'");
  }
}

int parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw UsageError("config key " + key + " expects an integer, got '" + text + "'");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> range_grid(const char* name, double lo, double hi, double step) {
  if (!(step > 0.0)) throw UsageError(std::string(name) + " step must be positive");
  if (hi < lo) throw UsageError(std::string(name) + " range has max < min");
  const long n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (n > 100000) throw UsageError(std::string(name) + " range has too many points");
  std::vector<double> g(n);
  for (long i = 0; i < n; ++i) g[i] = lo + step * static_cast<double>(i);
  return g;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"spectrum", "winding", "phase-diagram", "quench", "amplify", "check"};
  return names;
}

std::string config_schema_help() {
  std::ostringstream os;
  os << "Config file: flat 'key = value' lines grouped under [section] headers;\n"
        "'#' or ';' start comments. Recognised keys (default in brackets):\n";
  std::string section;
  for (const auto& e : schema()) {
    const std::string key = e.key;
    const std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      os << "  [" << sec << "]\n";
      section = sec;
    }
    os << "    " << key.substr(key.find('.') + 1) << " [" << e.fallback << "]  " << e.help << "\n";
  }
  return os.str();
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    for (std::size_t i = 1; i < t.size(); ++i)
      if ((t[i] == '#' || t[i] == ';') && (t[i - 1] == ' ' || t[i - 1] == '\t')) {
        t = trim(t.substr(0, i));
        break;
      }
    if (t.front() == '[') {
      if (t.back() != ']') throw UsageError("config line " + std::to_string(lineno) + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw UsageError("config line " + std::to_string(lineno) + ": key outside any [section]");
    const std::string key = section + "." + trim(t.substr(0, eq));
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<double> Settings::delta_grid() const { return range_grid("delta", delta_min, delta_max, delta_step); }

std::vector<double> Settings::theta_grid() const { return range_grid("theta", theta_min, theta_max, theta_step); }

Settings validate(const RunConfig& config) {
  if (!config.load_error.empty()) throw UsageError(config.load_error);
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), config.command) == names.end())
    throw UsageError("unknown command '" + config.command +
                     "' (expected spectrum, winding, phase-diagram, quench, amplify or check)");
  for (const auto& [key, value] : config.values) {
    const bool known = std::any_of(schema().begin(), schema().end(), [&](const SchemaEntry& e) { return key == e.key; });
    if (!known) throw UsageError("unknown config key '" + key + "'\n" + config_schema_help());
  }
  std::map<std::string, std::string> v;
  for (const auto& e : schema()) v[e.key] = e.fallback;
  if (config.command == "amplify") v["model.regime"] = "imaginary";
  for (const auto& [key, value] : config.values) v[key] = value;

  Settings s;
  s.command = config.command;
  try {
    s.J = parse_double("model.J", v["model.J"]);
    s.delta = parse_double("model.delta", v["model.delta"]);
    s.theta = parse_double("model.theta", v["model.theta"]);
    s.regime = parse_regime(v["model.regime"]);
    s.boundary = parse_boundary(v["model.boundary"]);
    s.format = parse_format(config.format);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  s.cells = parse_int("model.cells", v["model.cells"]);
  s.k_points = parse_int("grid.k_points", v["grid.k_points"]);
  s.spectrum_k_points = parse_int("grid.spectrum_k_points", v["grid.spectrum_k_points"]);
  s.delta_min = parse_double("grid.delta_min", v["grid.delta_min"]);
  s.delta_max = parse_double("grid.delta_max", v["grid.delta_max"]);
  s.delta_step = parse_double("grid.delta_step", v["grid.delta_step"]);
  s.theta_min = parse_double("grid.theta_min", v["grid.theta_min"]);
  s.theta_max = parse_double("grid.theta_max", v["grid.theta_max"]);
  s.theta_step = parse_double("grid.theta_step", v["grid.theta_step"]);
  s.J_i = parse_double("quench.J_i", v["quench.J_i"]);
  s.delta_i = parse_double("quench.delta_i", v["quench.delta_i"]);
  s.theta_i = parse_double("quench.theta_i", v["quench.theta_i"]);
  s.J_f = parse_double("quench.J_f", v["quench.J_f"]);
  s.delta_f = parse_double("quench.delta_f", v["quench.delta_f"]);
  s.theta_f = parse_double("quench.theta_f", v["quench.theta_f"]);
  s.k_per_half = parse_int("quench.k_per_half", v["quench.k_per_half"]);
  s.t_max = parse_double("quench.t_max", v["quench.t_max"]);
  s.t_samples = parse_int("quench.t_samples", v["quench.t_samples"]);
  s.n_min = parse_int("quench.n_min", v["quench.n_min"]);
  s.n_max = parse_int("quench.n_max", v["quench.n_max"]);
  s.pgp_k_stride = parse_int("quench.pgp_k_stride", v["quench.pgp_k_stride"]);
  s.pgp_t_stride = parse_int("quench.pgp_t_stride", v["quench.pgp_t_stride"]);
  s.amp_cells = parse_int("amplify.cells", v["amplify.cells"]);
  s.threads = config.threads;
  s.seed = config.seed;
  s.out_dir = config.out_dir;

  if (s.command == "amplify" && s.regime == Regime::Real)
    throw UsageError("quadratures do not decouple in the real regime");
  if (s.threads < 0) throw UsageError("--threads must be >= 0");
  try {
    derive_couplings(s.J, s.delta, s.theta);
    derive_couplings(s.J_i, s.delta_i, s.theta_i);
    derive_couplings(s.J_f, s.delta_f, s.theta_f);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (s.cells < 2 || s.amp_cells < 2) throw UsageError("unit-cell counts must be at least 2");
  if (s.cells > 200 || s.amp_cells > 200) throw UsageError("unit-cell counts above 200 are not supported (dense matrices)");
  if (s.k_points < 401) throw UsageError("grid.k_points must be at least 401");
  if (s.spectrum_k_points < 2) throw UsageError("grid.spectrum_k_points must be at least 2");
  if (s.k_per_half < 1 || s.t_samples < 2 || !(s.t_max > 0.0))
    throw UsageError("quench grids need k_per_half >= 1, t_samples >= 2 and t_max > 0");
  if (s.n_max < s.n_min) throw UsageError("quench.n_max must be >= quench.n_min");
  if (s.pgp_k_stride < 1 || s.pgp_t_stride < 1) throw UsageError("PGP strides must be positive");
  s.delta_grid();
  s.theta_grid();
  for (const double d : s.delta_grid()) derive_couplings(s.J, d, s.theta);

  for (const auto& e : schema()) s.echo.emplace_back(e.key, v[e.key]);
  s.echo.emplace_back("cli.command", s.command);
  s.echo.emplace_back("cli.format", config.format);
  s.echo.emplace_back("cli.threads", std::to_string(s.threads));
  s.echo.emplace_back("cli.seed", std::to_string(s.seed));
  s.echo.emplace_back("cli.out", s.out_dir.string());
  return s;
}

namespace {

struct Context {
  const Settings& s;
  std::vector<WrittenFile> files;
  std::map<std::string, double> tolerances;

  void write(const std::string& stem, Table t) {
    for (const auto& [k, val] : s.echo) t.metadata.emplace(k, val);
    t.metadata["tool_version"] = kToolVersion;
    files.push_back(write_table(s.out_dir, stem, t, s.format));
  }
  void observe(const std::string& name, double value) {
    auto it = tolerances.find(name);
    if (it == tolerances.end() || value > it->second || std::isnan(value)) tolerances[name] = value;
  }
};

void cmd_spectrum(Context& ctx) {
  const Settings& s = ctx.s;
  const auto deltas = s.delta_grid();
  Boundary b = s.boundary == BoundaryKind::Periodic ? Boundary{PeriodicBoundary{bz_grid(s.spectrum_k_points)}}
                                                   : Boundary{OpenBoundary{s.cells}};
  const SpectrumSweep sweep = spectrum_sweep(s.J, s.theta, deltas, s.regime, b, s.threads);
  Table spec{{"delta", "index", "re_lambda", "im_lambda"}, {}, sweep.metadata};
  Table summary{{"delta", "min_abs_lambda", "max_relative_imag", "purely_imaginary_count"}, {}, sweep.metadata};
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto& row = sweep.eigenvalues[i];
    long imaginary = 0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      spec.add({deltas[i], static_cast<long>(j), row[j].real(), row[j].imag()});
      if (std::abs(row[j].real()) < 1e-9 && std::abs(row[j].imag()) > 1e-6) ++imaginary;
    }
    summary.add({deltas[i], row.cwiseAbs().minCoeff(), sweep.relative_imag[i], imaginary});
    if (s.regime == Regime::Real && s.boundary == BoundaryKind::Open)
      ctx.observe("obc_max_relative_imag", sweep.relative_imag[i]);
  }
  const auto gaps = minimum_gap(sweep);
  const auto at = std::min_element(gaps.begin(), gaps.end()) - gaps.begin();
  summary.metadata["minimum_gap_delta"] = format_double(deltas[at]);
  if (s.regime == Regime::Imaginary) summary.metadata["delta0"] = format_double(transition_delta0(s.theta));
  ctx.write("spectrum", std::move(spec));
  ctx.write("spectrum_summary", std::move(summary));
}

void cmd_winding(Context& ctx) {
  const Settings& s = ctx.s;
  const CouplingSet c = derive_couplings(s.J, s.delta, s.theta);
  const auto grid = bz_grid(s.k_points);
  BlochProvider provider = s.regime == Regime::Real ? BlochProvider([&c](double k) { return bloch_nssh2(k, c); })
                                                     : BlochProvider([&c](double k) { return bloch_nssh1(k, c); });
  const WindingResult w = winding_pair(provider, grid);
  const cplx integral = winding_integral(provider, grid);
  const PhaseLabel label = s.regime == Regime::Real ? classify_phase_real(c) : classify_phase_imag(c, grid);
  Table t{{"delta", "theta", "nu1", "nu2", "nu", "grid_size", "imag_residual", "integral_re", "integral_im", "label"}, {}, {}};
  t.add({s.delta, s.theta, w.nu1, w.nu2, w.nu, static_cast<long>(w.grid_size), w.imag_residual, integral.real(),
         integral.imag(), to_string(label.phase)});
  ctx.observe("winding_imag_residual", w.imag_residual);
  ctx.observe("winding_integral_imag", std::abs(integral.imag()));
  ctx.write("winding", std::move(t));

  Table loops{{"k", "re_upper", "im_upper", "re_lower", "im_lower"}, {}, {}};
  if (s.regime == Regime::Real) {
    const EnergyLoops el = parametric_energy_loops(c, grid);
    loops.metadata["merged"] = el.merged ? "true" : "false";
    for (std::size_t j = 0; j < grid.size(); ++j)
      loops.add({grid[j], el.upper[j].real(), el.upper[j].imag(), el.lower[j].real(), el.lower[j].imag()});
  } else {
    for (double k : grid) {
      const Eigen::Matrix2cd h = nssh1_k(k, c);
      const cplx e = std::sqrt(h(0, 1) * h(1, 0));
      loops.add({k, e.real(), e.imag(), -e.real(), -e.imag()});
    }
  }
  ctx.write("energy_loops", std::move(loops));

  Table bloch{{"k", "dr_x", "dr_y", "di_x", "di_y"}, {}, {}};
  for (double k : grid) {
    const BlochVector d = provider(k);
    bloch.add({k, d.dr.x, d.dr.y, d.di.x, d.di.y});
  }
  if (s.regime == Regime::Real) {
    const auto ep = ep_locations_nssh2(c);
    bloch.metadata["ep1"] = format_double(ep.ep1.x) + " " + format_double(ep.ep1.y);
    bloch.metadata["ep2"] = format_double(ep.ep2.x) + " " + format_double(ep.ep2.y);
  }
  ctx.write("bloch_vector", std::move(bloch));
}

void cmd_phase_diagram(Context& ctx) {
  const Settings& s = ctx.s;
  const auto rows = phase_diagram(s.J, s.delta_grid(), s.theta_grid(), s.regime, bz_grid(s.k_points), s.threads);
  Table t{{"delta", "theta", "nu1", "nu2", "nu", "label"}, {}, {}};
  for (const auto& r : rows) {
    t.add({r.delta, r.theta, r.winding.nu1, r.winding.nu2, r.winding.nu, to_string(r.label)});
    if (std::isfinite(r.winding.imag_residual)) ctx.observe("winding_imag_residual", r.winding.imag_residual);
  }
  ctx.write("phase_diagram", std::move(t));
}

void cmd_quench(Context& ctx) {
  const Settings& s = ctx.s;
  const QuenchProtocol p{derive_couplings(s.J_i, s.delta_i, s.theta_i), derive_couplings(s.J_f, s.delta_f, s.theta_f),
                         symmetric_k_grid(s.k_per_half), time_grid(s.t_max, s.t_samples)};
  const LoschmidtResult lr = return_rate(p, s.threads);
  const CriticalTimes ct = critical_set(p, s.n_min, s.n_max);
  const PgpField field = pgp_field(p, s.threads);
  const DtopSeries ds = dtop(p, field, s.threads);

  Table rr{{"t", "return_rate"}, {}, {}};
  rr.metadata["distinct_momenta"] = std::to_string(lr.distinct_momenta);
  for (std::size_t i = 0; i < p.t_grid.size(); ++i) rr.add({p.t_grid[i], lr.return_rate[i]});
  ctx.write("return_rate", std::move(rr));

  Table dt{{"t", "dtop_plus", "dtop_minus"}, {}, {}};
  dt.metadata["refinements"] = std::to_string(ds.refinements);
  for (std::size_t i = 0; i < ds.t.size(); ++i) dt.add({ds.t[i], ds.dtop_plus[i], ds.dtop_minus[i]});
  ctx.write("dtop", std::move(dt));

  Table cr{{"n", "side", "k_c", "t_c", "residual"}, {}, {}};
  for (const auto& e : ct.entries) {
    cr.add({static_cast<long>(e.n), std::string(e.side == Side::Plus ? "+" : "-"), e.k_c, e.t_c, e.residual});
    ctx.observe("critical_residual", std::abs(e.residual));
  }
  ctx.write("critical_times", std::move(cr));

  Table pg{{"k", "t", "phi_pgp"}, {}, {}};
  pg.metadata["k_stride"] = std::to_string(s.pgp_k_stride);
  pg.metadata["t_stride"] = std::to_string(s.pgp_t_stride);
  pg.metadata["holes"] = std::to_string(field.holes.size());
  for (std::size_t j = 0; j < p.k_grid.size(); j += s.pgp_k_stride)
    for (std::size_t i = 0; i < p.t_grid.size(); i += s.pgp_t_stride)
      pg.add({p.k_grid[j], p.t_grid[i], field.phi_pgp(j, i)});
  ctx.write("pgp_grid", std::move(pg));
}

std::string cell_label(int index, bool ac_row, int quad) {
  const char* subs = ac_row ? "AC" : "BD";
  return std::string(quad == 0 ? "X" : "P") + "_" + std::to_string(index / 2 + 1) + subs[index % 2];
}

void cmd_amplify(Context& ctx) {
  const Settings& s = ctx.s;
  const CouplingSet c = derive_couplings(s.J, s.delta, s.theta);
  const SusceptibilityReport rep = susceptibility(c, s.amp_cells);
  ctx.observe("chi_x_inverse_residual", rep.residual_x);
  ctx.observe("chi_p_inverse_residual", rep.residual_p);
  struct Sub {
    const char* stem;
    const RMatrix* m;
    bool ac_rows;
    int quad;
  };
  const Sub subs[] = {{"chi_ac_x", &rep.chi_ac_x, true, 0},
                      {"chi_ac_p", &rep.chi_ac_p, true, 1},
                      {"chi_bd_x", &rep.chi_bd_x, false, 0},
                      {"chi_bd_p", &rep.chi_bd_p, false, 1}};
  for (const auto& sub : subs) {
    Table t{{"row", "col", "abs_chi"}, {}, {}};
    t.metadata["rcond_x"] = format_double(rep.rcond_x);
    t.metadata["rcond_p"] = format_double(rep.rcond_p);
    for (Eigen::Index i = 0; i < sub.m->rows(); ++i)
      for (Eigen::Index j = 0; j < sub.m->cols(); ++j)
        t.add({cell_label(static_cast<int>(i), sub.ac_rows, sub.quad), cell_label(static_cast<int>(j), !sub.ac_rows, sub.quad),
               std::abs((*sub.m)(i, j))});
    ctx.write(sub.stem, std::move(t));
  }
  Table g{{"sector", "quadrature", "direction", "gain_per_cell", "end_to_end"}, {}, {}};
  for (const auto& p : gain_metrics(rep))
    g.add({to_string(p.sector), to_string(p.quadrature), to_string(p.direction), p.gain_per_cell, p.end_to_end});
  ctx.write("gains", std::move(g));

  const double d0 = transition_delta0(s.theta);
  std::vector<double> deltas;
  for (double d : s.delta_grid())
    if (std::abs(d - d0) >= 1e-4) deltas.push_back(d);
  const auto rows = amplification_phase_scan(s.J, s.theta, deltas, s.amp_cells, s.threads);
  Table scan{{"delta", "delta0", "nu", "end_to_end_ac_x", "end_to_end_ac_p", "end_to_end_bd_x", "end_to_end_bd_p"}, {}, {}};
  for (const auto& r : rows) scan.add({r.delta, r.delta0, r.nu, r.gain_ac_x, r.gain_ac_p, r.gain_bd_x, r.gain_bd_p});
  ctx.write("amplification_scan", std::move(scan));
}

struct CheckRow {
  std::string name;
  double value;
  double tolerance;
  bool pass() const { return value < tolerance; }
};

std::vector<CheckRow> check_suite(int threads) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> uk(-kPi, kPi), ud(-0.95, 0.95), ut(0.0, 1.0), utime(0.0, 2.0);
  std::vector<CheckRow> rows;
  double sym = 0.0, unit = 0.0, br = 0.0, bi = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double k = uk(rng);
    const CouplingSet c = derive_couplings(1.0, ud(rng), ut(rng));
    for (Regime r : {Regime::Real, Regime::Imaginary}) {
      const SymmetryResiduals s = symmetry_residuals(k, c, r);
      sym = std::max({sym, s.phs1, s.pseudo_hermiticity, s.phs2, s.phs3, s.phs4});
      unit = std::max(unit, s.unitary);
    }
    br = std::max(br, block_diagonalize_real(k, c));
    bi = std::max(bi, block_diagonalize_imag(k, c));
  }
  rows.push_back({"particle_hole_and_pseudo_hermiticity", sym, 1e-12});
  rows.push_back({"unitary_symmetry_commutation", unit, 1e-12});
  rows.push_back({"block_diagonalization_real", br, 1e-12});
  rows.push_back({"block_diagonalization_imaginary", bi, 1e-12});

  const auto grid = bz_grid(2001);
  const double expected[3] = {0.0, 0.5, 1.0};
  const double deltas[3] = {-0.9, -0.1, 0.9};
  double wind = 0.0, wimag = 0.0;
  for (int i = 0; i < 3; ++i) {
    const CouplingSet c = derive_couplings(1.0, deltas[i], 0.4);
    const WindingResult w = winding_pair([&c](double k) { return bloch_nssh2(k, c); }, grid);
    wind = std::max(wind, std::abs(w.nu - expected[i]));
    wimag = std::max(wimag, w.imag_residual);
  }
  rows.push_back({"winding_phase_table", wind, 1e-3});
  rows.push_back({"winding_imaginary_residual", wimag, 1e-6});

  double lo = 0.0, norm = 0.0;
  int accepted = 0;
  while (accepted < 200) {
    const double k = uk(rng);
    const CouplingSet ci = derive_couplings(1.0, ud(rng), ut(rng));
    const CouplingSet cf = derive_couplings(1.0, ud(rng), ut(rng));
    const QuenchKernel q = quench_kernel(k, ci, cf);
    if (std::abs(q.energy_initial) < 0.05 || std::abs(q.energy_final) < 0.05) continue;
    const double t = utime(rng);
    const cplx a = loschmidt_gk(k, ci, cf, t);
    const double scale = std::max(1.0, std::abs(a));
    lo = std::max({lo, std::abs(a - loschmidt_oracle(k, ci, cf, t)) / scale,
                   std::abs(a - loschmidt_biorthogonal(k, ci, cf, t)) / scale});
    norm = std::max(norm, std::abs(quench_coefficients(k, ci, cf).normalization() - 1.0));
    ++accepted;
  }
  rows.push_back({"loschmidt_three_way", lo, 1e-9});
  rows.push_back({"quench_normalization_identity", norm, 1e-12});

  double quad = 0.0;
  for (int i = 0; i < 20; ++i) {
    const CouplingSet c = derive_couplings(1.0, ud(rng), ut(rng));
    const int n = 3;
    const CMatrix m = nambu_to_quadrature(realspace_dynamical(c, n, Regime::Imaginary, BoundaryKind::Open).values);
    quad = std::max({quad, max_abs(m.topRightCorner(4 * n, 4 * n)), max_abs(m.bottomLeftCorner(4 * n, 4 * n))});
  }
  rows.push_back({"quadrature_decoupling", quad, 1e-12});

  double closed = 0.0, inverse = 0.0;
  for (int n : {2, 4, 8}) {
    const CouplingSet c = derive_couplings(1.5, 1.0 / 3.0, 0.0);  // v = 1, w = 2
    const SusceptibilityReport rep = susceptibility(c, n);
    const ClosedFormChi cf = closed_form_theta0(c, n);
    closed = std::max({closed, (rep.chi_ac_x.cwiseAbs() - cf.abs_chi_ac).cwiseAbs().maxCoeff(),
                       (rep.chi_bd_x.cwiseAbs() - cf.abs_chi_bd).cwiseAbs().maxCoeff(),
                       (rep.chi_ac_p.cwiseAbs() - cf.abs_chi_ac).cwiseAbs().maxCoeff(),
                       (rep.chi_bd_p.cwiseAbs() - cf.abs_chi_bd).cwiseAbs().maxCoeff()});
    inverse = std::max({inverse, rep.residual_x, rep.residual_p});
  }
  rows.push_back({"susceptibility_closed_form", closed, 1e-10});
  rows.push_back({"susceptibility_inverse_residual", inverse, 1e-10});

  double ep = std::abs(transition_delta0(0.0));
  {
    const CouplingSet c = derive_couplings(1.0, 0.2, 0.4);
    const Nssh1ExceptionalPoint e = ep_nssh1(c);
    const CouplingSet at = derive_couplings(1.0, e.delta0, 0.4);
    ep = std::max({ep, std::abs(nssh1_x(e.k_star, at)), std::abs(nssh1_y(e.k_star, at))});
  }
  rows.push_back({"nssh1_exceptional_point", ep, 1e-10});

  double bio = 0.0;
  for (int i = 0; i < 20; ++i) {
    const CouplingSet c = derive_couplings(1.0, ud(rng), ut(rng));
    const EigenSystem es = eig_general(dynamical_qb_k(uk(rng), c, Regime::Real).values);
    if (es.any_defective()) continue;
    bio = std::max(bio, max_abs(es.left * es.right - CMatrix::Identity(8, 8)));
  }
  rows.push_back({"eig_biorthonormality", bio, 1e-9});
  (void)threads;
  return rows;
}

void cmd_check(Context& ctx, bool& failed) {
  Table t{{"check", "value", "tolerance", "status"}, {}, {}};
  for (const auto& r : check_suite(ctx.s.threads)) {
    t.add({r.name, r.value, r.tolerance, std::string(r.pass() ? "pass" : "fail")});
    ctx.observe(r.name, r.value);
    if (!r.pass()) failed = true;
  }
  ctx.write("check", std::move(t));
}

void write_manifest(const std::filesystem::path& dir, const nlohmann::ordered_json& manifest) {
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << "\n";
}

}  // namespace

RunOutcome run(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  nlohmann::ordered_json manifest;
  manifest["tool"] = "nhqb";
  manifest["tool_version"] = kToolVersion;
  manifest["command"] = config.command;
  RunOutcome outcome;

  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) return {kExitUsage, "cannot create output directory " + config.out_dir.string() + ": " + ec.message()};

  std::vector<WrittenFile> files;
  std::map<std::string, double> tolerances;
  try {
    const Settings s = validate(config);
    nlohmann::ordered_json echo;
    for (const auto& [k, v] : s.echo) echo[k] = v;
    manifest["config"] = echo;
    Context ctx{s, {}, {}};
    bool check_failed = false;
    try {
      if (s.command == "spectrum") cmd_spectrum(ctx);
      else if (s.command == "winding") cmd_winding(ctx);
      else if (s.command == "phase-diagram") cmd_phase_diagram(ctx);
      else if (s.command == "quench") cmd_quench(ctx);
      else if (s.command == "amplify") cmd_amplify(ctx);
      else cmd_check(ctx, check_failed);
      outcome = check_failed ? RunOutcome{kExitCheckFailed, "one or more invariant checks failed"} : RunOutcome{kExitOk, "ok"};
    } catch (const Error& e) {
      outcome = {kExitComputation, std::string(e.kind()) + ": " + e.what()};
    } catch (const std::exception& e) {
      outcome = {kExitComputation, e.what()};
    }
    files = ctx.files;
    tolerances = ctx.tolerances;
  } catch (const UsageError& e) {
    outcome = {kExitUsage, e.what()};
  }

  nlohmann::ordered_json flist = nlohmann::ordered_json::array();
  for (const auto& f : files) flist.push_back({{"name", f.name}, {"rows", f.rows}});
  manifest["files"] = flist;
  nlohmann::ordered_json tol = nlohmann::ordered_json::object();
  for (const auto& [k, v] : tolerances) tol[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(format_double(v));
  manifest["tolerance_report"] = tol;
  manifest["status"] = outcome.exit_code == kExitOk ? "ok" : "error";
  manifest["exit_code"] = outcome.exit_code;
  manifest["message"] = outcome.message;
  manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(config.out_dir, manifest);
  return outcome;
}

}  // namespace nhqb
