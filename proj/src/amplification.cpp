#include "nhqb/amplification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "nhqb/errors.hpp"
#include "nhqb/parallel.hpp"
#include "nhqb/topology.hpp"

namespace nhqb {

namespace {

RMatrix extract(const RMatrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  RMatrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

struct Inverse {
  RMatrix value;
  double residual;
  double rcond;
};

Inverse invert_checked(const RMatrix& h, const CouplingSet& c, const char* name) {
  Eigen::PartialPivLU<RMatrix> lu(h);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream os;
    os << name << " is singular (rcond=" << rcond << ") at delta=" << c.delta()
       << "; the transition point is delta0=" << transition_delta0(c.theta());
    throw SingularityError(os.str());
  }
  Inverse inv{lu.inverse(), 0.0, rcond};
  inv.residual = (inv.value * h - RMatrix::Identity(h.rows(), h.cols())).cwiseAbs().maxCoeff();
  return inv;
}

}  // namespace

std::vector<int> ac_indices(int cells) {
  std::vector<int> idx;
  for (int j = 0; j < cells; ++j) {
    idx.push_back(4 * j);
    idx.push_back(4 * j + 2);
  }
  return idx;
}

std::vector<int> bd_indices(int cells) {
  std::vector<int> idx;
  for (int j = 0; j < cells; ++j) {
    idx.push_back(4 * j + 1);
    idx.push_back(4 * j + 3);
  }
  return idx;
}

SusceptibilityReport susceptibility(const CouplingSet& c, int cells) {
  const QuadratureMatrices h = quadrature_dynamical(c, cells, BoundaryKind::Open);
  const Inverse ix = invert_checked(h.h_x, c, "h_x");
  const Inverse ip = invert_checked(h.h_p, c, "h_p");
  const auto ac = ac_indices(cells), bd = bd_indices(cells);
  return SusceptibilityReport{ix.value,
                              ip.value,
                              extract(ix.value, ac, bd),
                              extract(ip.value, ac, bd),
                              extract(ix.value, bd, ac),
                              extract(ip.value, bd, ac),
                              c,
                              cells,
                              ix.residual,
                              ip.residual,
                              ix.rcond,
                              ip.rcond};
}

ClosedFormChi closed_form_theta0(const CouplingSet& c, int cells) {
  if (c.theta() != 0.0) throw DomainError("closed-form susceptibility requires theta = 0");
  if (c.v() == 0.0) throw DomainError("closed-form susceptibility requires v != 0");
  const double g0 = std::abs(c.w_r() / c.v());
  const double pref = 1.0 / std::abs(c.v());
  const int n = 2 * cells;
  ClosedFormChi out{RMatrix::Zero(n, n), RMatrix::Zero(n, n)};
  for (int i = 0; i < cells; ++i)
    for (int j = i; j < cells; ++j)
      for (int s = 0; s < 2; ++s) {
        const double value = pref * std::pow(g0, j - i);
        out.abs_chi_ac(2 * i + s, 2 * j + s) = value;
        out.abs_chi_bd(2 * j + s, 2 * i + s) = value;
      }
  return out;
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::Leftward: return "leftward";
    case Direction::Rightward: return "rightward";
    case Direction::None: return "none";
  }
  return "none";
}

std::string to_string(Sector s) { return s == Sector::AC ? "AC" : "BD"; }

std::string to_string(Quadrature q) { return q == Quadrature::X ? "X" : "P"; }

GainProfile gain_profile(const RMatrix& sub, int cells, Sector s, Quadrature q) {
  GainProfile g;
  g.sector = s;
  g.quadrature = q;
  if (cells < 2) return g;
  std::vector<double> upper(cells, 0.0), lower(cells, 0.0);
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const double v = std::abs(sub(2 * i + a, 2 * j + b));
          if (j > i) upper[j - i] = std::max(upper[j - i], v);
          if (i > j) lower[i - j] = std::max(lower[i - j], v);
        }
  const bool use_upper = upper[cells - 1] >= lower[cells - 1];
  const auto& profile = use_upper ? upper : lower;
  g.end_to_end = profile[cells - 1];

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int m = 1; m < cells; ++m) {
    if (!(profile[m] > 1e-13)) continue;
    const double y = std::log(profile[m]);
    sx += m;
    sy += y;
    sxx += static_cast<double>(m) * m;
    sxy += m * y;
    ++count;
  }
  if (count >= 2) {
    const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    g.gain_per_cell = std::exp(slope);
  } else if (count == 1) {
    g.gain_per_cell = profile[1] > 1e-13 ? 1.0 : 0.0;
  }
  if (g.gain_per_cell > kDirectionThreshold) g.direction = use_upper ? Direction::Leftward : Direction::Rightward;
  return g;
}

std::vector<GainProfile> gain_metrics(const SusceptibilityReport& rep) {
  return {gain_profile(rep.chi_ac_x, rep.cells, Sector::AC, Quadrature::X),
          gain_profile(rep.chi_ac_p, rep.cells, Sector::AC, Quadrature::P),
          gain_profile(rep.chi_bd_x, rep.cells, Sector::BD, Quadrature::X),
          gain_profile(rep.chi_bd_p, rep.cells, Sector::BD, Quadrature::P)};
}

double AmplificationScanRow::max_end_to_end() const {
  return std::max({gain_ac_x, gain_ac_p, gain_bd_x, gain_bd_p});
}

std::vector<AmplificationScanRow> amplification_phase_scan(double J, double theta,
                                                           const std::vector<double>& delta_grid,
                                                           int cells, int threads) {
  const double delta0 = transition_delta0(theta);
  for (double d : delta_grid)
    if (std::abs(d - delta0) < 1e-4) {
      std::ostringstream os;
      os << "scan grid point delta=" << d << " lies within 1e-4 of delta0=" << delta0;
      throw DomainError(os.str());
    }
  std::vector<AmplificationScanRow> rows(delta_grid.size());
  parallel_for(delta_grid.size(), threads, [&](std::size_t i) {
    const double delta = delta_grid[i];
    const CouplingSet c = derive_couplings(J, delta, theta);
    AmplificationScanRow& row = rows[i];
    row.delta = delta;
    row.delta0 = ep_nssh1(c).delta0;
    std::optional<PhaseLabel> label;
    for (int points = 2001; !label; points *= 4) {
      try {
        label = classify_phase_imag(c, bz_grid(points));
      } catch (const ResolutionError&) {
        if (points > 200000) throw;
      }
    }
    row.nu = label->nu;
    try {
      const auto gains = gain_metrics(susceptibility(c, cells));
      row.gain_ac_x = gains[0].end_to_end;
      row.gain_ac_p = gains[1].end_to_end;
      row.gain_bd_x = gains[2].end_to_end;
      row.gain_bd_p = gains[3].end_to_end;
    } catch (const SingularityError& e) {
      std::ostringstream os;
      os << "at delta=" << delta << ": " << e.what();
      throw SingularityError(os.str());
    }
  });
  return rows;
}

namespace {

CMatrix t_matrix(Eigen::Index n) {
  const CMatrix I = CMatrix::Identity(n, n);
  CMatrix t(2 * n, 2 * n);
  t << I, kI * I, I, -kI * I;
  return t / std::sqrt(2.0);
}

CMatrix t_inverse(Eigen::Index n) {
  const CMatrix I = CMatrix::Identity(n, n);
  CMatrix t(2 * n, 2 * n);
  t << I, I, -kI * I, kI * I;
  return t / std::sqrt(2.0);
}

}  // namespace

CMatrix nambu_to_quadrature(const CMatrix& g_nambu) {
  if (g_nambu.rows() != g_nambu.cols() || g_nambu.rows() % 2 != 0)
    throw DomainError("Nambu matrix must be square with even dimension");
  const Eigen::Index n = g_nambu.rows() / 2;
  return t_inverse(n) * (-kI * g_nambu) * t_matrix(n);
}

CMatrix quadrature_to_nambu(const CMatrix& m) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw DomainError("quadrature matrix must be square with even dimension");
  const Eigen::Index n = m.rows() / 2;
  return kI * t_matrix(n) * m * t_inverse(n);
}

}  // namespace nhqb
