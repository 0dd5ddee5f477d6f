#include "nhqb/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nhqb/errors.hpp"
#include "nhqb/parallel.hpp"

namespace nhqb {

namespace {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

void check_bz_grid(const std::vector<double>& grid) {
  if (grid.size() < 401) throw DomainError("BZ grid needs at least 401 points");
  validate(Boundary{PeriodicBoundary{grid}});
}

double uniform_step(const std::vector<double>& grid) {
  const double h = 2.0 * kPi / static_cast<double>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double expected = grid.front() + h * static_cast<double>(i);
    if (std::abs(grid[i] - expected) > 1e-9) throw DomainError("winding integral requires a uniform BZ grid");
  }
  return h;
}

}  // namespace

std::vector<double> bz_grid(int points) {
  if (points < 2) throw DomainError("BZ grid needs at least 2 points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = -kPi + 2.0 * kPi * i / points;
  return g;
}

double phi1_of(const BlochVector& d) { return std::atan2(d.dr.y + d.di.x, d.dr.x - d.di.y); }

double phi2_of(const BlochVector& d) { return std::atan2(d.dr.y - d.di.x, d.dr.x + d.di.y); }

WindingResult winding_pair(const BlochProvider& provider, const std::vector<double>& grid) {
  check_bz_grid(grid);
  const std::size_t n = grid.size();
  std::vector<double> a1(n), a2(n), ai(n);
  for (std::size_t j = 0; j < n; ++j) {
    const BlochVector d = provider(grid[j]);
    a1[j] = phi1_of(d);
    a2[j] = phi2_of(d);
    const cplx ratio = (d.dx() + kI * d.dy()) / (d.dx() - kI * d.dy());
    ai[j] = -0.5 * std::log(std::abs(ratio));
  }
  double s1 = 0.0, s2 = 0.0, si = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t next = (j + 1) % n;
    const double d1 = wrap_angle(a1[next] - a1[j]);
    const double d2 = wrap_angle(a2[next] - a2[j]);
    if (std::abs(d1) > kPi / 2 || std::abs(d2) > kPi / 2) {
      std::ostringstream os;
      os << "winding angle increment exceeds pi/2 between k=" << grid[j] << " and k=" << grid[next]
         << "; refine the grid or move away from the exceptional point";
      throw ResolutionError(os.str());
    }
    s1 += d1;
    s2 += d2;
    si += ai[next] - ai[j];
  }
  WindingResult r;
  r.nu1 = s1 / (2.0 * kPi);
  r.nu2 = s2 / (2.0 * kPi);
  r.nu = 0.5 * (r.nu1 + r.nu2);
  r.grid_size = static_cast<int>(n);
  r.imag_residual = std::abs(si);
  return r;
}

cplx winding_integral(const BlochProvider& provider, const std::vector<double>& grid) {
  check_bz_grid(grid);
  const double h = uniform_step(grid);
  const std::size_t n = grid.size();
  std::vector<cplx> dx(n), dy(n);
  for (std::size_t j = 0; j < n; ++j) {
    const BlochVector d = provider(grid[j]);
    dx[j] = d.dx();
    dy[j] = d.dy();
  }
  auto deriv = [&](const std::vector<cplx>& f, std::size_t j) {
    auto at = [&](long off) { return f[(j + n + off) % n]; };
    return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
  };
  cplx total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const cplx norm = dx[j] * dx[j] + dy[j] * dy[j];
    if (std::abs(norm) < 1e-12) {
      std::ostringstream os;
      os << "d_x^2 + d_y^2 vanishes at k=" << grid[j] << " (exceptional point)";
      throw SingularityError(os.str());
    }
    total += (dx[j] * deriv(dy, j) - dy[j] * deriv(dx, j)) / norm;
  }
  return total * h / (2.0 * kPi);
}

ExceptionalPointPair ep_locations_nssh2(const CouplingSet& c) {
  const double u = c.w_half_diff();
  ExceptionalPointPair p;
  p.ep1 = {u, 0.0};
  p.ep2 = {-u, 0.0};
  p.degenerate = c.theta() == 0.0;
  return p;
}

int polygon_winding(const std::vector<PlanarVector>& loop, PlanarVector point) {
  double total = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t j = 0; j < n; ++j) {
    const PlanarVector& a = loop[j];
    const PlanarVector& b = loop[(j + 1) % n];
    const double ta = std::atan2(a.y - point.y, a.x - point.x);
    const double tb = std::atan2(b.y - point.y, b.x - point.x);
    total += wrap_angle(tb - ta);
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::Trivial: return "trivial";
    case Phase::Moebius: return "moebius";
    case Phase::NonTrivial: return "nontrivial";
    case Phase::Critical: return "critical";
  }
  return "unknown";
}

double moebius_lower_bound(double theta) {
  const double e = std::exp(theta);
  return (1.0 - e) / (1.0 + e);
}

PhaseLabel classify_phase_real(const CouplingSet& c) {
  PhaseLabel p;
  p.lower = moebius_lower_bound(c.theta());
  p.upper = 0.0;
  const double d = c.delta();
  if (std::abs(d - p.lower) < 1e-6 || std::abs(d - p.upper) < 1e-6) {
    p.phase = Phase::Critical;
    p.nu = std::numeric_limits<double>::quiet_NaN();
  } else if (d < p.lower) {
    p.phase = Phase::Trivial;
    p.nu = 0.0;
  } else if (d < p.upper) {
    p.phase = Phase::Moebius;
    p.nu = 0.5;
  } else {
    p.phase = Phase::NonTrivial;
    p.nu = 1.0;
  }
  return p;
}

double transition_delta0(double theta) {
  const double s = std::sqrt(0.5 * (1.0 + std::exp(2.0 * theta)));
  return (1.0 - s) / (1.0 + s);
}

Nssh1ExceptionalPoint ep_nssh1(const CouplingSet& c) {
  const double wr = c.w_r(), wl = c.w_l();
  const double norm2 = wr * wr + wl * wl;
  Nssh1ExceptionalPoint ep;
  ep.v_critical = std::sqrt(0.5 * norm2);
  const double arg = -(wr + wl) / std::sqrt(2.0 * norm2);
  if (!std::isfinite(arg) || std::abs(arg) > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "arccos argument " << arg << " outside [-1, 1] when locating the nSSH1 exceptional point";
    throw ConsistencyError(os.str());
  }
  ep.k_star = std::acos(std::clamp(arg, -1.0, 1.0));
  ep.delta0 = transition_delta0(c.theta());
  return ep;
}

double nssh1_x(double k, const CouplingSet& c) {
  const double v = c.v(), wr = c.w_r(), wl = c.w_l();
  return v * v + v * (wr + wl) * std::cos(k) + wr * wl;
}

double nssh1_y(double k, const CouplingSet& c) {
  return (c.w_l() - c.w_r()) * (c.v() * std::cos(k) + c.w_mean());
}

PhaseLabel classify_phase_imag(const CouplingSet& c, const std::vector<double>& grid) {
  PhaseLabel p;
  p.lower = p.upper = transition_delta0(c.theta());
  if (std::abs(c.delta() - p.lower) < 1e-6) {
    p.phase = Phase::Critical;
    p.nu = std::numeric_limits<double>::quiet_NaN();
    return p;
  }
  const WindingResult w = winding_pair([&c](double k) { return bloch_nssh1(k, c); }, grid);
  const long nu = std::lround(w.nu);
  const long expected = c.delta() > p.lower ? 1 : 0;
  if (std::abs(w.nu - static_cast<double>(nu)) > 1e-3 || nu != expected) {
    std::ostringstream os;
    os << "nSSH1 winding " << w.nu << " disagrees with delta=" << c.delta()
       << " relative to delta0=" << p.lower;
    throw ConsistencyError(os.str());
  }
  p.nu = static_cast<double>(nu);
  p.phase = nu == 1 ? Phase::NonTrivial : Phase::Trivial;
  return p;
}

EnergyLoops parametric_energy_loops(const CouplingSet& c, const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("energy loops need a non-empty grid");
  EnergyLoops loops;
  loops.k = grid;
  loops.upper.reserve(grid.size());
  loops.lower.reserve(grid.size());
  for (double k : grid) {
    const cplx e = energy_nssh2(k, c);
    loops.upper.push_back(e);
    loops.lower.push_back(-e);
  }
  // follow one band continuously once around the zone; ending on the other
  // band means the two loops join into one
  cplx current = loops.upper.front();
  for (std::size_t j = 1; j <= grid.size(); ++j) {
    const cplx e = loops.upper[j % grid.size()];
    current = std::abs(e - current) <= std::abs(-e - current) ? e : -e;
  }
  const cplx start = loops.upper.front();
  loops.merged = std::abs(start) > 1e-12 && std::abs(current + start) < std::abs(current - start);
  double sep = std::numeric_limits<double>::infinity();
  for (const cplx& e : loops.upper) sep = std::min(sep, 2.0 * std::abs(e));
  loops.band_separation = sep;
  return loops;
}

std::vector<PhaseDiagramRow> phase_diagram(double J, const std::vector<double>& deltas,
                                           const std::vector<double>& thetas, Regime r,
                                           const std::vector<double>& grid, int threads) {
  std::vector<PhaseDiagramRow> rows(deltas.size() * thetas.size());
  parallel_for(rows.size(), threads, [&](std::size_t idx) {
    const double delta = deltas[idx / thetas.size()];
    const double theta = thetas[idx % thetas.size()];
    PhaseDiagramRow& row = rows[idx];
    row.delta = delta;
    row.theta = theta;
    const CouplingSet c = derive_couplings(J, delta, theta);
    const PhaseLabel label = r == Regime::Real ? classify_phase_real(c) : classify_phase_imag(c, grid);
    row.label = label.phase;
    if (label.phase == Phase::Critical) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.winding = {nan, nan, nan, static_cast<int>(grid.size()), nan};
      return;
    }
    try {
      if (r == Regime::Real)
        row.winding = winding_pair([&c](double k) { return bloch_nssh2(k, c); }, grid);
      else
        row.winding = winding_pair([&c](double k) { return bloch_nssh1(k, c); }, grid);
    } catch (const ResolutionError& e) {
      std::ostringstream os;
      os << "at delta=" << delta << ", theta=" << theta << ": " << e.what();
      throw ResolutionError(os.str());
    }
  });
  return rows;
}

}  // namespace nhqb
