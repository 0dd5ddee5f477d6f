#pragma once

#include <string>
#include <vector>

#include "nhqb/model.hpp"

namespace nhqb {

struct SusceptibilityReport {
  RMatrix chi_x, chi_p;
  // rows (1A, 1C, 2A, 2C, ...), columns (1B, 1D, 2B, 2D, ...)
  RMatrix chi_ac_x, chi_ac_p;
  // rows (1B, 1D, 2B, 2D, ...), columns (1A, 1C, 2A, 2C, ...)
  RMatrix chi_bd_x, chi_bd_p;
  CouplingSet params;
  int cells = 0;
  double residual_x = 0.0, residual_p = 0.0;
  double rcond_x = 0.0, rcond_p = 0.0;
};

SusceptibilityReport susceptibility(const CouplingSet& c, int cells);

// Rows and columns of the sector sub-matrices within the 4N quadrature ordering.
std::vector<int> ac_indices(int cells);
std::vector<int> bd_indices(int cells);

struct ClosedFormChi {
  RMatrix abs_chi_ac;
  RMatrix abs_chi_bd;
};

ClosedFormChi closed_form_theta0(const CouplingSet& c, int cells);

enum class Direction { Leftward, Rightward, None };
enum class Sector { AC, BD };
enum class Quadrature { X, P };

std::string to_string(Direction d);
std::string to_string(Sector s);
std::string to_string(Quadrature q);

struct GainProfile {
  Direction direction = Direction::None;
  double gain_per_cell = 0.0;
  double end_to_end = 0.0;
  Sector sector = Sector::AC;
  Quadrature quadrature = Quadrature::X;
};

inline constexpr double kDirectionThreshold = 1.02;

// Upper triangle (row cell < column cell) carries leftward amplification,
// lower triangle rightward.
GainProfile gain_profile(const RMatrix& sub, int cells, Sector s, Quadrature q);
std::vector<GainProfile> gain_metrics(const SusceptibilityReport& rep);

struct AmplificationScanRow {
  double delta = 0.0;
  double delta0 = 0.0;
  double nu = 0.0;
  double gain_ac_x = 0.0, gain_ac_p = 0.0, gain_bd_x = 0.0, gain_bd_p = 0.0;
  double max_end_to_end() const;
};

std::vector<AmplificationScanRow> amplification_phase_scan(double J, double theta,
                                                           const std::vector<double>& delta_grid,
                                                           int cells, int threads = 0);

// T^{-1} (-i G) T with T mapping (X, P) to (a, a^+).
CMatrix nambu_to_quadrature(const CMatrix& g_nambu);
CMatrix quadrature_to_nambu(const CMatrix& m);

}  // namespace nhqb
