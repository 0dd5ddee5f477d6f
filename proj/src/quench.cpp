#include "nhqb/quench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nhqb/errors.hpp"
#include "nhqb/parallel.hpp"
#include "nhqb/spectral.hpp"

namespace nhqb {

namespace {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

struct DVec {
  cplx x, y;
};

DVec complex_d(double k, const CouplingSet& c) {
  const BlochVector b = bloch_nssh2(k, c);
  return {b.dx(), b.dy()};
}

// Indices of momenta counted once each; the +pi edge duplicates -pi.
std::vector<std::size_t> distinct_momenta(const std::vector<double>& ks) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    if (j + 1 == ks.size() && std::abs(ks[j] - kPi) < 1e-12 && std::abs(ks.front() + kPi) < 1e-12)
      continue;
    idx.push_back(j);
  }
  return idx;
}

// Phase of g_k unwrapped along t up to time index n.
double unwrapped_phase(const QuenchKernel& q, const std::vector<double>& ts, std::size_t n) {
  double prev = 0.0, acc = 0.0;
  bool started = false;
  for (std::size_t i = 0; i <= n; ++i) {
    const cplx e = q.energy_final * ts[i];
    const cplx g = std::cos(e) + kI * q.overlap * std::sin(e);
    if (g == cplx(0.0)) continue;
    const double a = std::arg(g);
    if (!started) {
      acc = a;
      started = true;
    } else {
      acc += wrap_angle(a - prev);
    }
    prev = a;
  }
  return acc;
}

}  // namespace

std::vector<double> symmetric_k_grid(int per_half) {
  if (per_half < 1) throw DomainError("momentum grid needs at least one point per half zone");
  std::vector<double> g(2 * per_half + 1);
  for (int i = -per_half; i <= per_half; ++i) g[i + per_half] = kPi * i / per_half;
  return g;
}

std::vector<double> time_grid(double t_max, int samples) {
  if (!(t_max > 0.0) || samples < 2) throw DomainError("time grid needs t_max > 0 and at least 2 samples");
  std::vector<double> t(samples);
  for (int i = 0; i < samples; ++i) t[i] = t_max * i / (samples - 1);
  return t;
}

void validate(const QuenchProtocol& p) {
  const auto& ks = p.k_grid;
  if (ks.size() < 3) throw DomainError("quench momentum grid too small");
  for (std::size_t j = 1; j < ks.size(); ++j)
    if (!(ks[j] > ks[j - 1])) throw DomainError("quench momentum grid not strictly increasing");
  const std::size_t n = ks.size();
  for (std::size_t j = 0; j < n; ++j)
    if (std::abs(ks[j] + ks[n - 1 - j]) > 1e-12) throw DomainError("quench momentum grid lacks matched +-k pairs");
  if (n % 2 == 0) throw DomainError("quench momentum grid must contain k = 0");
  if (std::abs(ks.front() + kPi) > 1e-12) throw DomainError("quench momentum grid must span [-pi, pi]");
  const auto& ts = p.t_grid;
  if (ts.empty()) throw DomainError("quench time grid is empty");
  if (ts.front() < 0.0) throw DomainError("quench times must be non-negative");
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1])) throw DomainError("quench time grid not strictly increasing");
}

QuenchKernel quench_kernel(double k, const CouplingSet& ci, const CouplingSet& cf) {
  const DVec di = complex_d(k, ci), df = complex_d(k, cf);
  const cplx ni = di.x * di.x + di.y * di.y;
  const cplx nf = df.x * df.x + df.y * df.y;
  if (std::abs(ni) < 1e-14 || std::abs(nf) < 1e-14) {
    std::ostringstream os;
    os << "d.d vanishes at k=" << k << " (" << (std::abs(ni) < 1e-14 ? "initial" : "final")
       << " Hamiltonian at an exceptional point); normalization undefined";
    throw ExceptionalPointError(os.str());
  }
  QuenchKernel q;
  q.energy_initial = std::sqrt(ni);
  q.energy_final = std::sqrt(nf);
  q.overlap = (di.x * df.x + di.y * df.y) / (q.energy_initial * q.energy_final);
  return q;
}

cplx loschmidt_gk(double k, const CouplingSet& ci, const CouplingSet& cf, double t) {
  const QuenchKernel q = quench_kernel(k, ci, cf);
  const cplx e = q.energy_final * t;
  return std::cos(e) + kI * q.overlap * std::sin(e);
}

cplx QuenchCoefficients::normalization() const { return (Q2 * Q2 - Q1 * Q1) * (F2 * F2 - F1 * F1); }

QuenchCoefficients quench_coefficients(double k, const CouplingSet& ci, const CouplingSet& cf) {
  const QuenchKernel q = quench_kernel(k, ci, cf);
  const cplx upper_i = hamiltonian_nssh2_k(k, ci)(0, 1);
  const cplx lower_f = hamiltonian_nssh2_k(k, cf)(1, 0);
  const cplx denom = upper_i * lower_f;
  if (std::abs(denom) < 1e-14) throw ExceptionalPointError("vanishing off-diagonal element in quench coefficients");
  const cplx s = q.energy_initial * q.energy_final / denom;
  return {0.5 * (1.0 + s), 0.5 * (1.0 - s), 0.5 * (1.0 + 1.0 / s), 0.5 * (1.0 - 1.0 / s)};
}

cplx loschmidt_oracle(double k, const CouplingSet& ci, const CouplingSet& cf, double t) {
  const QuenchCoefficients c = quench_coefficients(k, ci, cf);
  const cplx e = quench_kernel(k, ci, cf).energy_final;
  return (c.Q2 * c.F2 * std::exp(-kI * e * t) + c.Q1 * c.F1 * std::exp(kI * e * t)) / c.normalization();
}

cplx loschmidt_biorthogonal(double k, const CouplingSet& ci, const CouplingSet& cf, double t) {
  const EigenSystem ei = eig_general(hamiltonian_nssh2_k(k, ci));
  const EigenSystem ef = eig_general(hamiltonian_nssh2_k(k, cf));
  if (ei.any_defective() || ef.any_defective())
    throw ExceptionalPointError("2x2 block is defective; biorthogonal evolution undefined");
  const cplx target = -energy_nssh2(k, ci);
  const Eigen::Index pick = std::abs(ei.values[0] - target) <= std::abs(ei.values[1] - target) ? 0 : 1;
  const Eigen::VectorXcd r = ei.right.col(pick);
  const Eigen::RowVectorXcd l = ei.left.row(pick);
  Eigen::VectorXcd phases(2);
  for (int j = 0; j < 2; ++j) phases[j] = std::exp(-kI * ef.values[j] * t);
  const CMatrix evolution = ef.right * phases.asDiagonal() * ef.left;
  return (l * evolution * r)(0, 0);
}

LoschmidtResult return_rate(const QuenchProtocol& p, int threads) {
  validate(p);
  const auto& ks = p.k_grid;
  const auto& ts = p.t_grid;
  LoschmidtResult out;
  out.gk.resize(static_cast<Eigen::Index>(ks.size()), static_cast<Eigen::Index>(ts.size()));
  parallel_for(ks.size(), threads, [&](std::size_t j) {
    const QuenchKernel q = quench_kernel(ks[j], p.initial, p.final);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const cplx e = q.energy_final * ts[i];
      out.gk(j, i) = std::cos(e) + kI * q.overlap * std::sin(e);
    }
  });
  const auto idx = distinct_momenta(ks);
  out.distinct_momenta = static_cast<int>(idx.size());
  out.return_rate.assign(ts.size(), 0.0);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double sum = 0.0;
    bool zero = false;
    for (auto j : idx) {
      const double mag = std::abs(out.gk(j, i));
      if (mag == 0.0) {
        zero = true;
        break;
      }
      sum += 2.0 * std::log(mag);
    }
    out.return_rate[i] = zero ? std::numeric_limits<double>::infinity() : -sum / static_cast<double>(idx.size());
  }
  return out;
}

std::vector<cplx> fisher_zeros(double k, const CouplingSet& ci, const CouplingSet& cf, int n_min, int n_max) {
  const QuenchKernel q = quench_kernel(k, ci, cf);
  const cplx x = q.overlap;
  if (std::abs(x.imag()) <= 1e-14 * std::max(1.0, std::abs(x)) && std::abs(x.real()) >= 1.0) {
    std::ostringstream os;
    os << "overlap " << x.real() << " at k=" << k << " lies on the atanh branch cut (real, |x| >= 1)";
    throw BranchError(os.str());
  }
  const cplx b = std::atanh(-x);
  std::vector<cplx> out;
  for (int n = n_min; n <= n_max; ++n) out.push_back((kI * kPi * (n + 0.5) + b) / q.energy_final);
  return out;
}

double critical_condition(double k, const CouplingSet& ci, const CouplingSet& cf, int n) {
  const QuenchKernel q = quench_kernel(k, ci, cf);
  const cplx b = std::atanh(-q.overlap);
  return kPi * (n + 0.5) * q.energy_final.imag() + (std::conj(q.energy_final) * b).real();
}

double critical_time(double k, const CouplingSet& ci, const CouplingSet& cf, int n) {
  const QuenchKernel q = quench_kernel(k, ci, cf);
  const cplx b = std::atanh(-q.overlap);
  return (kPi * (n + 0.5) * q.energy_final.real() + (std::conj(q.energy_final) * b).imag()) /
         std::norm(q.energy_final);
}

CriticalTimes critical_set(const QuenchProtocol& p, int n_min, int n_max) {
  validate(p);
  const auto& ks = p.k_grid;
  const double t_lo = p.t_grid.front(), t_hi = p.t_grid.back();
  CriticalTimes out;
  for (int n = n_min; n <= n_max; ++n) {
    std::vector<double> f(ks.size());
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const bool inside = std::abs(ks[j]) > 0.0 && std::abs(ks[j]) < kPi;
      f[j] = inside ? critical_condition(ks[j], p.initial, p.final, n) : std::numeric_limits<double>::quiet_NaN();
    }
    for (std::size_t j = 0; j + 1 < ks.size(); ++j) {
      if (std::isnan(f[j]) || std::isnan(f[j + 1])) continue;
      if ((f[j] > 0.0) == (f[j + 1] > 0.0) && f[j] != 0.0) continue;
      double a = ks[j], b = ks[j + 1], fa = f[j];
      while (b - a > 1e-12) {
        const double m = 0.5 * (a + b);
        const double fm = critical_condition(m, p.initial, p.final, n);
        if ((fm > 0.0) == (fa > 0.0) && fm != 0.0) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      const double kc = 0.5 * (a + b);
      const double residual = critical_condition(kc, p.initial, p.final, n);
      // brackets across a branch-cut jump converge without a root
      if (!(std::abs(residual) < 1e-9)) continue;
      const double tc = critical_time(kc, p.initial, p.final, n);
      if (!(tc > 0.0) || tc < t_lo || tc > t_hi) continue;
      out.entries.push_back({n, kc > 0.0 ? Side::Plus : Side::Minus, kc, tc, residual});
    }
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const CriticalEntry& x, const CriticalEntry& y) { return x.t_c < y.t_c; });
  return out;
}

PgpField pgp_field(const QuenchProtocol& p, int threads) {
  validate(p);
  const auto& ks = p.k_grid;
  const auto& ts = p.t_grid;
  const auto nk = static_cast<Eigen::Index>(ks.size());
  const auto nt = static_cast<Eigen::Index>(ts.size());
  PgpField f{RMatrix(nk, nt), RMatrix(nk, nt), RMatrix(nk, nt), {}};
  std::vector<std::vector<std::pair<int, int>>> holes(ks.size());
  parallel_for(ks.size(), threads, [&](std::size_t j) {
    const QuenchKernel q = quench_kernel(ks[j], p.initial, p.final);
    const double rate = (q.energy_final * q.overlap).real();
    double prev = 0.0, acc = 0.0;
    bool started = false;
    std::vector<Eigen::Index> pending;
    for (Eigen::Index i = 0; i < nt; ++i) {
      const cplx e = q.energy_final * ts[i];
      const cplx g = std::cos(e) + kI * q.overlap * std::sin(e);
      if (g == cplx(0.0)) {
        holes[j].push_back({static_cast<int>(j), static_cast<int>(i)});
        pending.push_back(i);
        continue;
      }
      const double a = std::arg(g);
      acc = started ? acc + wrap_angle(a - prev) : a;
      // holes are filled by linear interpolation for display only
      for (auto h : pending) {
        const double lo = started ? f.phi_total(j, pending.front() - 1) : acc;
        const double frac = started ? (ts[h] - ts[pending.front() - 1]) / (ts[i] - ts[pending.front() - 1]) : 0.0;
        f.phi_total(j, h) = lo + frac * (acc - lo);
      }
      pending.clear();
      started = true;
      prev = a;
      f.phi_total(j, i) = acc;
    }
    for (auto h : pending) f.phi_total(j, h) = started ? acc : 0.0;
    for (Eigen::Index i = 0; i < nt; ++i) f.phi_dyn(j, i) = rate * ts[i];
  });
  f.phi_pgp = f.phi_total - f.phi_dyn;
  for (const auto& h : holes) f.holes.insert(f.holes.end(), h.begin(), h.end());
  return f;
}

DtopSeries dtop(const QuenchProtocol& p, int threads) { return dtop(p, pgp_field(p, threads), threads); }

DtopSeries dtop(const QuenchProtocol& p, const PgpField& field, int threads) {
  validate(p);
  const auto& ks = p.k_grid;
  const auto& ts = p.t_grid;
  const std::size_t nk = ks.size(), nt = ts.size();
  const std::size_t mid = nk / 2;
  constexpr int kMaxDepth = 24;

  std::vector<std::vector<bool>> is_hole(nk, std::vector<bool>(nt, false));
  for (const auto& [j, i] : field.holes) is_hole[j][i] = true;

  DtopSeries out;
  out.t = ts;
  out.dtop_plus.assign(nt, 0.0);
  out.dtop_minus.assign(nt, 0.0);
  std::vector<long> refinements(nt, 0);

  parallel_for(nt, threads, [&](std::size_t i) {
    auto pgp_at = [&](double k) {
      const QuenchKernel q = quench_kernel(k, p.initial, p.final);
      return unwrapped_phase(q, ts, i) - (q.energy_final * q.overlap).real() * ts[i];
    };
    // wrapped increment between two momenta, bisecting until every piece is below pi/2
    auto increment = [&](auto&& self, double ka, double pa, double kb, double pb, int depth) -> double {
      const double d = wrap_angle(pb - pa);
      if (std::abs(d) <= kPi / 2) return d;
      if (depth >= kMaxDepth) {
        std::ostringstream os;
        os << "PGP increment " << d << " between k=" << ka << " and k=" << kb << " at t=" << ts[i]
           << " still exceeds pi/2 after " << kMaxDepth << " refinements";
        throw ResolutionError(os.str());
      }
      ++refinements[i];
      const double km = 0.5 * (ka + kb);
      const double pm = pgp_at(km);
      return self(self, ka, pa, km, pm, depth + 1) + self(self, km, pm, kb, pb, depth + 1);
    };
    double plus = 0.0, minus = 0.0;
    std::size_t j = 0;
    while (j + 1 < nk) {
      std::size_t next = j + 1;
      while (next + 1 < nk && next != mid && is_hole[next][i]) ++next;
      if (is_hole[j][i]) {
        j = next;
        continue;
      }
      const double d = increment(increment, ks[j], field.phi_pgp(j, i), ks[next], field.phi_pgp(next, i), 0);
      (j >= mid ? plus : minus) += d;
      j = next;
    }
    out.dtop_plus[i] = plus / (2.0 * kPi);
    out.dtop_minus[i] = minus / (2.0 * kPi);
  });
  for (long r : refinements) out.refinements += r;
  return out;
}

std::vector<double> rr_cusp_times(const std::vector<double>& t, const std::vector<double>& rr, double sharpness,
                                  int window) {
  std::vector<double> out;
  if (t.size() < 5 || t.size() != rr.size() || window < 1) return out;
  const std::size_t n = rr.size();
  std::vector<double> d2(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) d2[i] = rr[i + 1] - 2.0 * rr[i] + rr[i - 1];
  std::vector<double> mags;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    if (!(d2[i] <= d2[i - 1] && d2[i] <= d2[i + 1] && d2[i] < 0.0)) continue;
    const std::size_t lo = i > static_cast<std::size_t>(window) ? i - window : 1;
    const std::size_t hi = std::min(n - 1, i + window + 1);
    mags.clear();
    for (std::size_t j = lo; j < hi; ++j) mags.push_back(std::abs(d2[j]));
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    if (d2[i] < -sharpness * mags[mags.size() / 2]) out.push_back(t[i]);
  }
  return out;
}

}  // namespace nhqb
