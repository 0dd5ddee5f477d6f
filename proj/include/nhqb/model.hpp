#pragma once

#include <complex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace nhqb {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// Physical parameters (J, delta, theta) and the couplings they determine.
// Instances are created only through derive_couplings and never mutated.
class CouplingSet {
 public:
  double J() const { return J_; }
  double delta() const { return delta_; }
  double theta() const { return theta_; }
  double v() const { return v_; }
  double w_r() const { return w_r_; }
  double w_l() const { return w_l_; }
  // (w_l + w_r) / 2 and (w_l - w_r) / 2
  double w_mean() const { return 0.5 * (w_l_ + w_r_); }
  double w_half_diff() const { return 0.5 * (w_l_ - w_r_); }

  friend CouplingSet derive_couplings(double J, double delta, double theta);

 private:
  CouplingSet(double J, double delta, double theta);

  double J_, delta_, theta_;
  double v_, w_r_, w_l_;
};

CouplingSet derive_couplings(double J, double delta, double theta);

enum class Regime { Real, Imaginary };

std::string to_string(Regime r);
Regime parse_regime(const std::string& text);

enum class BoundaryKind { Periodic, Open };

struct PeriodicBoundary {
  std::vector<double> k_grid;
};

struct OpenBoundary {
  int cells = 0;
};

using Boundary = std::variant<PeriodicBoundary, OpenBoundary>;

std::string to_string(BoundaryKind b);
BoundaryKind parse_boundary(const std::string& text);

// Throws DomainError unless the grid is strictly increasing inside [-pi, pi)
// or the cell count is at least two.
void validate(const Boundary& b);

struct LabeledMatrix {
  CMatrix values;
  std::string basis;
};

struct PlanarVector {
  double x = 0.0;
  double y = 0.0;
};

// d = dr + i di, with the 2x2 block given by d.sigma.
struct BlochVector {
  PlanarVector dr;
  PlanarVector di;

  cplx dx() const { return {dr.x, di.x}; }
  cplx dy() const { return {dr.y, di.y}; }
  Eigen::Matrix2cd matrix() const;
};

struct CouplingFunctions {
  cplx f1;
  cplx f2;
};

CouplingFunctions coupling_functions(double k, const CouplingSet& c);

Eigen::Matrix2cd hamiltonian_nssh2_k(double k, const CouplingSet& c);
BlochVector bloch_nssh2(double k, const CouplingSet& c);
cplx energy_nssh2(double k, const CouplingSet& c);

Eigen::Matrix2cd nssh1_k(double k, const CouplingSet& c);
BlochVector bloch_nssh1(double k, const CouplingSet& c);

std::string nambu_k_basis();
std::string realspace_basis(int cells);
std::string quadrature_basis(int cells);

LabeledMatrix hamiltonian_qb_k(double k, const CouplingSet& c, Regime r);
LabeledMatrix dynamical_qb_k(double k, const CouplingSet& c, Regime r);

// Hopping block K and pairing block Delta of the real-space quadratic form,
// in cell-major (A, B, C, D) order.
struct QuadraticForm {
  CMatrix K;
  CMatrix Delta;
};

QuadraticForm realspace_quadratic_form(const CouplingSet& c, int cells, Regime r,
                                       BoundaryKind b);
LabeledMatrix realspace_dynamical(const CouplingSet& c, int cells, Regime r,
                                  BoundaryKind b);

struct QuadratureMatrices {
  RMatrix h_x;
  RMatrix h_p;
};

QuadratureMatrices quadrature_dynamical(const CouplingSet& c, int cells, BoundaryKind b);

// G = [[K, Delta], [-conj(Delta), -K^T]]
CMatrix build_dynamical_from_blocks(const CMatrix& K, const CMatrix& Delta);

CMatrix kron(const CMatrix& a, const CMatrix& b);
CMatrix pauli(int index);  // 0 = identity, 1..3 = x, y, z

// Symmetry operators acting on the 8x8 Nambu space.
CMatrix tau(int index);       // sigma_index (x) I4
CMatrix tau_tilde_1();        // I2 (x) sigma_x (x) I2
CMatrix gamma_phs3();         // sigma_x (x) sigma_y (x) sigma_z
CMatrix gamma_phs4();         // sigma_z (x) sigma_z (x) I2

struct SymmetryResiduals {
  double phs1 = 0.0;
  double pseudo_hermiticity = 0.0;
  double phs2 = 0.0;  // real regime only
  double phs3 = 0.0;  // imaginary regime only
  double phs4 = 0.0;  // imaginary regime only
  double unitary = 0.0;
};

SymmetryResiduals symmetry_residuals(double k, const CouplingSet& c, Regime r);

double max_abs(const CMatrix& m);

}  // namespace nhqb
