#include "nhqb/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "nhqb/errors.hpp"
#include "nhqb/parallel.hpp"

namespace nhqb {

bool EigenSystem::any_defective() const {
  return std::find(defective.begin(), defective.end(), true) != defective.end();
}

namespace {

bool lex_less(const cplx& a, const cplx& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

Eigen::ComplexEigenSolver<CMatrix> solve_checked(const CMatrix& a, bool vectors) {
  Eigen::ComplexEigenSolver<CMatrix> solver;
  solver.compute(a, vectors);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "complex Schur iteration did not converge for a " << a.rows() << "x" << a.cols()
       << " matrix within " << solver.getMaxIterations() << " iterations per row ("
       << solver.getMaxIterations() * a.rows() << " total)";
    throw ConvergenceError(os.str());
  }
  return solver;
}

// Groups indices whose eigenvalues lie within tol of each other (transitively).
std::vector<std::vector<Eigen::Index>> clusters_of(const Eigen::VectorXcd& values, double tol) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](Eigen::Index i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  // values are sorted by real part, so the inner loop can stop early
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n && values[j].real() - values[i].real() <= tol; ++j) {
      if (std::abs(values[i] - values[j]) <= tol) parent[find(j)] = find(i);
    }
  }
  std::vector<std::vector<Eigen::Index>> groups;
  std::vector<Eigen::Index> slot(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<Eigen::Index>(groups.size());
      groups.emplace_back();
    }
    groups[slot[root]].push_back(i);
  }
  return groups;
}

}  // namespace

EigenSystem eig_general(const CMatrix& a, const EigOptions& opts) {
  if (a.rows() != a.cols()) throw DomainError("eig_general requires a square matrix");
  const Eigen::Index n = a.rows();
  EigenSystem es;
  if (n == 0) return es;
  if (!a.allFinite()) throw DomainError("eig_general input contains non-finite entries");

  const auto rs = solve_checked(a, true);
  const auto ls = solve_checked(a.transpose(), true);

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&rs](Eigen::Index x, Eigen::Index y) {
    return lex_less(rs.eigenvalues()[x], rs.eigenvalues()[y]);
  });

  es.values.resize(n);
  es.right.resize(n, n);
  es.left.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    es.values[i] = rs.eigenvalues()[order[i]];
    es.right.col(i) = rs.eigenvectors().col(order[i]).normalized();
  }

  // Pair each eigenvalue with the nearest unused eigenvalue of the transpose.
  std::vector<bool> taken(n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (taken[j]) continue;
      const double d = std::abs(ls.eigenvalues()[j] - es.values[i]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    taken[best] = true;
    es.left.row(i) = ls.eigenvectors().col(best).transpose().normalized();
  }

  const double scale = std::max(1.0, es.values.cwiseAbs().maxCoeff());
  es.defective.assign(n, false);
  const auto groups = clusters_of(es.values, opts.cluster_tol * scale);

  for (const auto& g : groups) {
    const Eigen::Index m = static_cast<Eigen::Index>(g.size());
    CMatrix s(m, m);
    for (Eigen::Index p = 0; p < m; ++p)
      for (Eigen::Index q = 0; q < m; ++q)
        s(p, q) = (es.left.row(g[p]) * es.right.col(g[q]))(0, 0);
    Eigen::JacobiSVD<CMatrix> svd(s);
    const double smin = svd.singularValues()(m - 1);
    if (smin < opts.defect_tol) {
      for (auto idx : g) es.defective[idx] = true;
    }
  }

  // Eigenvalues split by roundoff at an EP land in different clusters, but
  // their right vectors are numerically parallel.
  const double near = opts.near_pair_tol * scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n && es.values[j].real() - es.values[i].real() <= near; ++j) {
      if (std::abs(es.values[i] - es.values[j]) > near) continue;
      const double overlap = std::abs(es.right.col(i).dot(es.right.col(j)));
      if (1.0 - overlap * overlap < opts.defect_tol) es.defective[i] = es.defective[j] = true;
    }
  }

  for (const auto& g : groups) {
    const Eigen::Index m = static_cast<Eigen::Index>(g.size());
    bool flagged = false;
    for (auto idx : g) flagged = flagged || es.defective[idx];
    if (flagged) continue;
    CMatrix lc(m, n), rc(n, m);
    for (Eigen::Index p = 0; p < m; ++p) {
      lc.row(p) = es.left.row(g[p]);
      rc.col(p) = es.right.col(g[p]);
    }
    const CMatrix s = lc * rc;
    const CMatrix fixed = s.partialPivLu().solve(lc);
    for (Eigen::Index p = 0; p < m; ++p) es.left.row(g[p]) = fixed.row(p);
  }

  es.condition.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pairing = std::abs((es.left.row(i) * es.right.col(i))(0, 0));
    es.condition[i] = es.defective[i] || pairing == 0.0
                          ? std::numeric_limits<double>::infinity()
                          : std::max(1.0, es.left.row(i).norm() * es.right.col(i).norm() / pairing);
  }
  return es;
}

Eigen::VectorXcd eigenvalues_sorted(const CMatrix& a) {
  if (a.rows() != a.cols()) throw DomainError("eigenvalues require a square matrix");
  const auto solver = solve_checked(a, false);
  Eigen::VectorXcd v = solver.eigenvalues();
  std::sort(v.data(), v.data() + v.size(), lex_less);
  return v;
}

CMatrix q_real() {
  const Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity(), Z = Eigen::Matrix2cd::Zero();
  CMatrix q(8, 8);
  q << I, Z, Z, I,
       Z, I, I, Z,
       Z, -I, I, Z,
       I, Z, Z, -I;
  return q / std::sqrt(2.0);
}

CMatrix q_tilde_printed() {
  Eigen::Matrix2cd g1 = Eigen::Matrix2cd::Zero(), g2 = Eigen::Matrix2cd::Zero();
  g1.diagonal() << kI, 1.0;
  g2.diagonal() << -kI, 1.0;
  const Eigen::Matrix2cd Z = Eigen::Matrix2cd::Zero();
  CMatrix q(8, 8);
  q << g1, Z, Z, g2,
       Z, g2, g1, Z,
       Z, -kI * g1, kI * g2, Z,
       kI * g2, Z, Z, -kI * g1;
  return q / std::sqrt(2.0);
}

CMatrix q_tilde_imag() {
  CMatrix q = q_tilde_printed();
  q.col(3) *= -1.0;
  q.col(5) *= -1.0;
  return q;
}

namespace {

CMatrix block_diag4(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b, const Eigen::Matrix2cd& c,
                    const Eigen::Matrix2cd& d) {
  CMatrix out = CMatrix::Zero(8, 8);
  out.block<2, 2>(0, 0) = a;
  out.block<2, 2>(2, 2) = b;
  out.block<2, 2>(4, 4) = c;
  out.block<2, 2>(6, 6) = d;
  return out;
}

}  // namespace

double block_diagonalize_real(double k, const CouplingSet& c) {
  const CMatrix q = q_real();
  const CMatrix g = dynamical_qb_k(k, c, Regime::Real).values;
  const Eigen::Matrix2cd h = hamiltonian_nssh2_k(k, c);
  const CMatrix target = block_diag4(h, -h.adjoint(), -h, h.adjoint());
  return max_abs(q.adjoint() * g * q - target);
}

double block_diagonalize_imag(double k, const CouplingSet& c) {
  const CMatrix q = q_tilde_imag();
  const CMatrix g = dynamical_qb_k(k, c, Regime::Imaginary).values;
  const Eigen::Matrix2cd h = nssh1_k(k, c);
  const CMatrix target = block_diag4(h, -h, h.adjoint(), -h.adjoint());
  return max_abs(q.adjoint() * g * q - target);
}

SpectrumSweep spectrum_sweep(double J, double theta, const std::vector<double>& delta_grid,
                             Regime r, const Boundary& b, int threads) {
  if (delta_grid.empty()) throw DomainError("spectrum sweep needs a non-empty delta grid");
  for (std::size_t i = 1; i < delta_grid.size(); ++i)
    if (!(delta_grid[i] > delta_grid[i - 1])) throw DomainError("delta grid must be strictly increasing");
  validate(b);
  derive_couplings(J, delta_grid.front(), theta);

  SpectrumSweep sweep;
  sweep.deltas = delta_grid;
  sweep.eigenvalues.resize(delta_grid.size());
  sweep.relative_imag.resize(delta_grid.size());
  sweep.metadata["J"] = std::to_string(J);
  sweep.metadata["theta"] = std::to_string(theta);
  sweep.metadata["regime"] = to_string(r);

  const auto* pbc = std::get_if<PeriodicBoundary>(&b);
  if (pbc) {
    sweep.metadata["boundary"] = "pbc";
    sweep.metadata["k_points"] = std::to_string(pbc->k_grid.size());
  } else {
    sweep.metadata["boundary"] = "obc";
    sweep.metadata["cells"] = std::to_string(std::get<OpenBoundary>(b).cells);
  }

  parallel_for(delta_grid.size(), threads, [&](std::size_t i) {
    const double delta = delta_grid[i];
    try {
      const CouplingSet c = derive_couplings(J, delta, theta);
      Eigen::VectorXcd row;
      if (pbc) {
        const auto& ks = pbc->k_grid;
        row.resize(8 * static_cast<Eigen::Index>(ks.size()));
        for (std::size_t j = 0; j < ks.size(); ++j)
          row.segment(8 * static_cast<Eigen::Index>(j), 8) =
              eigenvalues_sorted(dynamical_qb_k(ks[j], c, r).values);
      } else {
        row = eigenvalues_sorted(
            realspace_dynamical(c, std::get<OpenBoundary>(b).cells, r, BoundaryKind::Open).values);
      }
      const double top = row.cwiseAbs().maxCoeff();
      sweep.relative_imag[i] = top > 0.0 ? row.imag().cwiseAbs().maxCoeff() / top : 0.0;
      sweep.eigenvalues[i] = std::move(row);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "at delta=" << delta << ": " << e.what();
      throw ConvergenceError(os.str());
    }
  });
  return sweep;
}

std::vector<double> minimum_gap(const SpectrumSweep& sweep) {
  std::vector<double> out;
  out.reserve(sweep.eigenvalues.size());
  for (const auto& row : sweep.eigenvalues) out.push_back(row.cwiseAbs().minCoeff());
  return out;
}

std::vector<LocalizationEntry> ipr_localization(const CMatrix& a, int cells) {
  if (a.rows() != a.cols()) throw DomainError("ipr_localization requires a square matrix");
  if (cells < 1 || a.rows() % (2 * cells) != 0)
    throw DomainError("matrix size is not a multiple of twice the cell count");
  const EigenSystem es = eig_general(a);
  const Eigen::Index n = a.rows();
  const Eigen::Index half = n / 2, per_cell = half / cells;
  Eigen::VectorXd position(n);
  for (Eigen::Index row = 0; row < n; ++row)
    position[row] = static_cast<double>((row % half) / per_cell);

  const double scale = std::max(1.0, es.values.cwiseAbs().maxCoeff());
  const auto groups = clusters_of(es.values, 1e-8 * scale);
  std::vector<LocalizationEntry> out;
  out.reserve(n);
  for (const auto& g : groups) {
    const Eigen::Index m = static_cast<Eigen::Index>(g.size());
    CMatrix rc(n, m);
    for (Eigen::Index p = 0; p < m; ++p) rc.col(p) = es.right.col(g[p]);
    if (m > 1) {
      const CMatrix s = rc.adjoint() * rc;
      const CMatrix x = rc.adjoint() * position.asDiagonal() * rc;
      Eigen::SelfAdjointEigenSolver<CMatrix> gram(s);
      if (gram.eigenvalues().minCoeff() > 1e-12) {
        Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> ges(x, s);
        rc = rc * ges.eigenvectors();
      }
    }
    for (Eigen::Index p = 0; p < m; ++p) {
      const Eigen::VectorXcd psi = rc.col(p).normalized();
      const Eigen::VectorXd prob = psi.cwiseAbs2();
      out.push_back({es.values[g[p]], prob.squaredNorm(), prob.dot(position)});
    }
  }
  return out;
}

double edge_fraction(const std::vector<LocalizationEntry>& entries, int cells, double outer) {
  if (entries.empty()) return 0.0;
  const double span = static_cast<double>(cells - 1);
  std::size_t count = 0;
  for (const auto& e : entries)
    if (e.mean_position < outer * span || e.mean_position > (1.0 - outer) * span) ++count;
  return static_cast<double>(count) / static_cast<double>(entries.size());
}

}  // namespace nhqb
