#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nhqb/model.hpp"

namespace nhqb {

using BlochProvider = std::function<BlochVector(double)>;

// points samples of [-pi, pi) with the endpoint excluded.
std::vector<double> bz_grid(int points = 2001);

struct WindingResult {
  double nu1 = 0.0;
  double nu2 = 0.0;
  double nu = 0.0;
  int grid_size = 0;
  double imag_residual = 0.0;
};

// Angles of the two combinations d^r_x -/+ d^i_y and d^r_y +/- d^i_x.
double phi1_of(const BlochVector& d);
double phi2_of(const BlochVector& d);

WindingResult winding_pair(const BlochProvider& d, const std::vector<double>& grid);
cplx winding_integral(const BlochProvider& d, const std::vector<double>& grid);

struct ExceptionalPointPair {
  PlanarVector ep1;
  PlanarVector ep2;
  bool degenerate = false;
};

ExceptionalPointPair ep_locations_nssh2(const CouplingSet& c);

// Number of times a closed polygon winds around point.
int polygon_winding(const std::vector<PlanarVector>& loop, PlanarVector point);

enum class Phase { Trivial, Moebius, NonTrivial, Critical };

std::string to_string(Phase p);

struct PhaseLabel {
  Phase phase = Phase::Trivial;
  double lower = 0.0;
  double upper = 0.0;
  double nu = 0.0;
};

double moebius_lower_bound(double theta);
PhaseLabel classify_phase_real(const CouplingSet& c);

struct Nssh1ExceptionalPoint {
  double v_critical = 0.0;
  double k_star = 0.0;
  double delta0 = 0.0;
};

double transition_delta0(double theta);
Nssh1ExceptionalPoint ep_nssh1(const CouplingSet& c);

// X(k) and Y(k) with det H_nSSH1 = -(X + iY).
double nssh1_x(double k, const CouplingSet& c);
double nssh1_y(double k, const CouplingSet& c);

PhaseLabel classify_phase_imag(const CouplingSet& c, const std::vector<double>& grid);

struct EnergyLoops {
  std::vector<double> k;
  std::vector<cplx> upper;
  std::vector<cplx> lower;
  bool merged = false;
  double band_separation = 0.0;  // min distance between the two traces
};

EnergyLoops parametric_energy_loops(const CouplingSet& c, const std::vector<double>& grid);

struct PhaseDiagramRow {
  double delta = 0.0;
  double theta = 0.0;
  WindingResult winding;
  Phase label = Phase::Trivial;
};

std::vector<PhaseDiagramRow> phase_diagram(double J, const std::vector<double>& deltas,
                                           const std::vector<double>& thetas, Regime r,
                                           const std::vector<double>& grid, int threads = 0);

}  // namespace nhqb
