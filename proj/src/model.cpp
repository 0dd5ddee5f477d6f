#include "nhqb/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nhqb/errors.hpp"

namespace nhqb {

CouplingSet::CouplingSet(double J, double delta, double theta)
    : J_(J), delta_(delta), theta_(theta) {
  v_ = J * (1.0 - delta);
  w_r_ = J * (1.0 + delta);
  w_l_ = w_r_ * std::exp(theta);
}

CouplingSet derive_couplings(double J, double delta, double theta) {
  if (!(J > 0.0) || !std::isfinite(J))
    throw DomainError("J must be a positive finite energy scale, got " + std::to_string(J));
  if (!std::isfinite(delta) || !std::isfinite(theta))
    throw DomainError("delta and theta must be finite");
  if (theta < 0.0) throw DomainError("theta must be non-negative, got " + std::to_string(theta));
  return CouplingSet(J, delta, theta);
}

std::string to_string(Regime r) { return r == Regime::Real ? "real" : "imaginary"; }

Regime parse_regime(const std::string& text) {
  if (text == "real") return Regime::Real;
  if (text == "imaginary" || text == "imag") return Regime::Imaginary;
  throw DomainError("unknown regime '" + text + "' (expected real or imaginary)");
}

std::string to_string(BoundaryKind b) { return b == BoundaryKind::Periodic ? "pbc" : "obc"; }

BoundaryKind parse_boundary(const std::string& text) {
  if (text == "pbc") return BoundaryKind::Periodic;
  if (text == "obc") return BoundaryKind::Open;
  throw DomainError("unknown boundary '" + text + "' (expected pbc or obc)");
}

void validate(const Boundary& b) {
  if (const auto* p = std::get_if<PeriodicBoundary>(&b)) {
    const auto& g = p->k_grid;
    if (g.empty()) throw DomainError("PBC momentum grid is empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] < -kPi || g[i] >= kPi) throw DomainError("PBC momentum outside [-pi, pi)");
      if (i > 0 && !(g[i] > g[i - 1])) throw DomainError("PBC momentum grid not strictly increasing");
    }
  } else {
    if (std::get<OpenBoundary>(b).cells < 2) throw DomainError("OBC requires at least 2 unit cells");
  }
}

Eigen::Matrix2cd BlochVector::matrix() const {
  Eigen::Matrix2cd m;
  m << 0.0, dx() - kI * dy(), dx() + kI * dy(), 0.0;
  return m;
}

CouplingFunctions coupling_functions(double k, const CouplingSet& c) {
  const cplx e = std::exp(-kI * k);
  return {c.v() + c.w_mean() * e, c.w_half_diff() * e};
}

Eigen::Matrix2cd hamiltonian_nssh2_k(double k, const CouplingSet& c) {
  Eigen::Matrix2cd h;
  h << 0.0, c.v() + c.w_r() * std::exp(-kI * k), c.v() + c.w_l() * std::exp(kI * k), 0.0;
  return h;
}

BlochVector bloch_nssh2(double k, const CouplingSet& c) {
  const double wb = c.w_mean(), u = c.w_half_diff();
  return {{c.v() + wb * std::cos(k), wb * std::sin(k)}, {u * std::sin(k), -u * std::cos(k)}};
}

cplx energy_nssh2(double k, const CouplingSet& c) {
  const cplx sq = c.v() * c.v() + c.w_r() * c.w_l() +
                  c.v() * (c.w_l() * std::exp(kI * k) + c.w_r() * std::exp(-kI * k));
  return std::sqrt(sq);
}

namespace {

cplx p1_of(double k, const CouplingSet& c) {
  return c.v() + 0.5 * (1.0 + kI) * (c.w_l() - kI * c.w_r()) * std::exp(-kI * k);
}

cplx p2_of(double k, const CouplingSet& c) {
  return c.v() + 0.5 * (1.0 - kI) * (c.w_l() + kI * c.w_r()) * std::exp(-kI * k);
}

}  // namespace

Eigen::Matrix2cd nssh1_k(double k, const CouplingSet& c) {
  Eigen::Matrix2cd h;
  h << 0.0, p1_of(k, c), std::conj(p2_of(k, c)), 0.0;
  return h;
}

BlochVector bloch_nssh1(double k, const CouplingSet& c) {
  const double wb = c.w_mean(), u = c.w_half_diff();
  return {{c.v() + wb * std::cos(k), wb * std::sin(k)}, {u * std::cos(k), u * std::sin(k)}};
}

std::string nambu_k_basis() {
  return "(A_k, B_k, C_k, D_k, A_-k^+, B_-k^+, C_-k^+, D_-k^+)";
}

std::string realspace_basis(int cells) {
  std::ostringstream os;
  os << "cell-major annihilators (A_j, B_j, C_j, D_j) for j=1.." << cells
     << ", then creators (A_j^+, B_j^+, C_j^+, D_j^+) in the same order";
  return os.str();
}

std::string quadrature_basis(int cells) {
  std::ostringstream os;
  os << "X quadratures (X_jA, X_jB, X_jC, X_jD) for j=1.." << cells
     << ", then P quadratures in the same order";
  return os.str();
}

LabeledMatrix hamiltonian_qb_k(double k, const CouplingSet& c, Regime r) {
  const auto [f1, f2] = coupling_functions(k, c);
  const cplx f1c = std::conj(f1), f2c = std::conj(f2);
  Eigen::Matrix4cd P = Eigen::Matrix4cd::Zero(), Q = Eigen::Matrix4cd::Zero();
  CMatrix h(8, 8);
  if (r == Regime::Real) {
    P(0, 1) = f1;
    P(1, 0) = f1c;
    P(2, 3) = -f1;
    P(3, 2) = -f1c;
    Q(0, 3) = -f2;
    Q(1, 2) = f2c;
    Q(2, 1) = f2;
    Q(3, 0) = -f2c;
    h << P, Q, Q, P;
  } else {
    P(0, 1) = kI * f1;
    P(1, 0) = -kI * f1c;
    P(2, 3) = -kI * f1;
    P(3, 2) = kI * f1c;
    Q(0, 3) = kI * f2;
    Q(1, 2) = kI * f2c;
    Q(2, 1) = kI * f2;
    Q(3, 0) = kI * f2c;
    h << P, Q, -Q, -P;
  }
  return {h, nambu_k_basis()};
}

LabeledMatrix dynamical_qb_k(double k, const CouplingSet& c, Regime r) {
  LabeledMatrix h = hamiltonian_qb_k(k, c, r);
  h.values.bottomRows(4) *= -1.0;
  return h;
}

QuadraticForm realspace_quadratic_form(const CouplingSet& c, int cells, Regime r,
                                       BoundaryKind b) {
  if (cells < 2) throw DomainError("real-space chain needs at least 2 unit cells");
  const int n = 4 * cells;
  const cplx s = r == Regime::Real ? cplx(1.0) : kI;
  const double wb = c.w_mean(), u = c.w_half_diff();
  QuadraticForm q{CMatrix::Zero(n, n), CMatrix::Zero(n, n)};
  auto site = [cells](int j, int sub) { return 4 * (j % cells) + sub; };
  auto hop = [&q](int p, int qq, cplx coeff) {
    q.K(p, qq) += coeff;
    q.K(qq, p) += std::conj(coeff);
  };
  auto pair = [&q](int p, int qq, cplx coeff) {
    q.Delta(p, qq) += coeff;
    q.Delta(qq, p) += coeff;
  };
  enum { A, B, C, D };
  for (int j = 0; j < cells; ++j) {
    hop(site(j, A), site(j, B), s * c.v());
    hop(site(j, C), site(j, D), -s * c.v());
    if (j + 1 < cells || b == BoundaryKind::Periodic) {
      hop(site(j + 1, A), site(j, B), s * wb);
      hop(site(j + 1, C), site(j, D), -s * wb);
      pair(site(j, B), site(j + 1, C), s * u);
      pair(site(j + 1, A), site(j, D), std::conj(-s * u));
    }
  }
  return q;
}

LabeledMatrix realspace_dynamical(const CouplingSet& c, int cells, Regime r, BoundaryKind b) {
  const QuadraticForm q = realspace_quadratic_form(c, cells, r, b);
  return {build_dynamical_from_blocks(q.K, q.Delta), realspace_basis(cells)};
}

QuadratureMatrices quadrature_dynamical(const CouplingSet& c, int cells, BoundaryKind b) {
  if (cells < 2) throw DomainError("quadrature chain needs at least 2 unit cells");
  const int n = 4 * cells;
  const double v = c.v(), wb = c.w_mean(), u = c.w_half_diff();
  QuadratureMatrices out{RMatrix::Zero(n, n), RMatrix::Zero(n, n)};
  const bool periodic = b == BoundaryKind::Periodic;
  auto at = [cells](int j, int sub) { return 4 * ((j + cells) % cells) + sub; };
  enum { A, B, C, D };
  for (int pass = 0; pass < 2; ++pass) {
    RMatrix& h = pass == 0 ? out.h_x : out.h_p;
    const double sg = pass == 0 ? 1.0 : -1.0;
    for (int j = 0; j < cells; ++j) {
      h(at(j, A), at(j, B)) += v;
      h(at(j, B), at(j, A)) -= v;
      h(at(j, C), at(j, D)) -= v;
      h(at(j, D), at(j, C)) += v;
      if (j > 0 || periodic) {
        h(at(j, A), at(j - 1, B)) += wb;
        h(at(j, A), at(j - 1, D)) += sg * u;
        h(at(j, C), at(j - 1, D)) -= wb;
        h(at(j, C), at(j - 1, B)) += sg * u;
      }
      if (j + 1 < cells || periodic) {
        h(at(j, B), at(j + 1, A)) -= wb;
        h(at(j, B), at(j + 1, C)) += sg * u;
        h(at(j, D), at(j + 1, C)) += wb;
        h(at(j, D), at(j + 1, A)) += sg * u;
      }
    }
  }
  return out;
}

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

CMatrix build_dynamical_from_blocks(const CMatrix& K, const CMatrix& Delta) {
  if (K.rows() != K.cols() || Delta.rows() != Delta.cols() || K.rows() != Delta.rows())
    throw ValidationError("K and Delta must be square matrices of equal size");
  const double scale = std::max({1.0, max_abs(K), max_abs(Delta)});
  if (max_abs(K - K.adjoint()) > 1e-12 * scale)
    throw ValidationError("hopping block K is not Hermitian (K != K^+)");
  if (max_abs(Delta - Delta.transpose()) > 1e-12 * scale)
    throw ValidationError("pairing block Delta is not symmetric (Delta != Delta^T)");
  const Eigen::Index n = K.rows();
  CMatrix g(2 * n, 2 * n);
  g << K, Delta, -Delta.conjugate(), -K.transpose();
  return g;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMatrix pauli(int index) {
  CMatrix s = CMatrix::Zero(2, 2);
  switch (index) {
    case 0: s << 1, 0, 0, 1; break;
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -kI, kI, 0; break;
    case 3: s << 1, 0, 0, -1; break;
    default: throw DomainError("Pauli index must be 0..3");
  }
  return s;
}

CMatrix tau(int index) { return kron(pauli(index), CMatrix::Identity(4, 4)); }

CMatrix tau_tilde_1() { return kron(kron(pauli(0), pauli(1)), pauli(0)); }

CMatrix gamma_phs3() { return kron(kron(pauli(1), pauli(2)), pauli(3)); }

CMatrix gamma_phs4() { return kron(kron(pauli(3), pauli(3)), pauli(0)); }

SymmetryResiduals symmetry_residuals(double k, const CouplingSet& c, Regime r) {
  const CMatrix g = dynamical_qb_k(k, c, r).values;
  const CMatrix gm = dynamical_qb_k(-k, c, r).values.conjugate();
  const CMatrix t1 = tau(1), t3 = tau(3);
  SymmetryResiduals res;
  res.phs1 = max_abs(t1 * gm * t1 + g);
  res.pseudo_hermiticity = max_abs(t3 * g.adjoint() * t3 - g);
  if (r == Regime::Real) {
    const CMatrix tt = tau_tilde_1();
    res.phs2 = max_abs(tt * gm * tt + g);
    const CMatrix u = t1 * tt;
    res.unitary = max_abs(u * g - g * u);
  } else {
    const CMatrix ga = gamma_phs3(), gb = gamma_phs4();
    res.phs3 = max_abs(ga * gm * ga.adjoint() + g);
    res.phs4 = max_abs(gb * gm * gb.adjoint() + g);
    const CMatrix u = ga * gb;
    res.unitary = max_abs(u * g - g * u);
  }
  return res;
}

}  // namespace nhqb
