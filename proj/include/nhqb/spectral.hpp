#pragma once

#include <map>
#include <string>
#include <vector>

#include "nhqb/model.hpp"

namespace nhqb {

struct EigenSystem {
  Eigen::VectorXcd values;
  CMatrix right;  // columns, unit Euclidean norm
  CMatrix left;   // rows, left * right = identity on non-defective pairs
  Eigen::VectorXd condition;
  std::vector<bool> defective;

  bool any_defective() const;
};

struct EigOptions {
  double cluster_tol = 1e-8;      // relative distance joining eigenvalues into a cluster
  double defect_tol = 1e-10;      // normalized biorthogonal factor below this flags an EP
  double near_pair_tol = 1e-6;    // relative distance for the coalescing-pair test
};

EigenSystem eig_general(const CMatrix& a, const EigOptions& opts = {});

// Eigenvalues only, sorted lexicographically by (Re, Im).
Eigen::VectorXcd eigenvalues_sorted(const CMatrix& a);

CMatrix q_real();
CMatrix q_tilde_imag();
CMatrix q_tilde_printed();  // gamma columns exactly as displayed, without the sign correction

double block_diagonalize_real(double k, const CouplingSet& c);
double block_diagonalize_imag(double k, const CouplingSet& c);

struct SpectrumSweep {
  std::vector<double> deltas;
  std::vector<Eigen::VectorXcd> eigenvalues;
  std::vector<double> relative_imag;  // max|Im| / max|lambda| per delta
  std::map<std::string, std::string> metadata;
};

SpectrumSweep spectrum_sweep(double J, double theta, const std::vector<double>& delta_grid,
                             Regime r, const Boundary& b, int threads = 0);

// Minimum |lambda| over the sweep row, one value per delta.
std::vector<double> minimum_gap(const SpectrumSweep& sweep);

struct LocalizationEntry {
  cplx value;
  double ipr = 0.0;
  double mean_position = 0.0;
};

// Rows form two halves (ladder and conjugate, or X and P), each cell-major; the
// cell index of a row is (row mod n/2) / (n/2 / cells), counted from 0.
// Eigenvectors of a degenerate cluster are rotated to diagonalize the position
// operator within the cluster before the diagnostics are taken.
std::vector<LocalizationEntry> ipr_localization(const CMatrix& a, int cells);

double edge_fraction(const std::vector<LocalizationEntry>& entries, int cells,
                     double outer = 0.2);

}  // namespace nhqb
