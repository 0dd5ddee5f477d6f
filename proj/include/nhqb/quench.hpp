#pragma once

#include <utility>
#include <vector>

#include "nhqb/model.hpp"

namespace nhqb {

struct QuenchProtocol {
  CouplingSet initial;
  CouplingSet final;
  std::vector<double> k_grid;
  std::vector<double> t_grid;
};

// 2 * per_half + 1 momenta spanning [-pi, pi] inclusive, symmetric about 0.
std::vector<double> symmetric_k_grid(int per_half = 1000);
std::vector<double> time_grid(double t_max, int samples = 800);

// Grid must be symmetric about zero, contain 0 and both zone edges +-pi;
// times strictly increasing and non-negative.
void validate(const QuenchProtocol& p);

struct QuenchKernel {
  cplx energy_initial;
  cplx energy_final;
  cplx overlap;  // normalized bilinear product of the initial and final d vectors
};

QuenchKernel quench_kernel(double k, const CouplingSet& ci, const CouplingSet& cf);

cplx loschmidt_gk(double k, const CouplingSet& ci, const CouplingSet& cf, double t);

struct QuenchCoefficients {
  cplx F1, F2, Q1, Q2;
  cplx normalization() const;  // (Q2^2 - Q1^2)(F2^2 - F1^2)
};

QuenchCoefficients quench_coefficients(double k, const CouplingSet& ci, const CouplingSet& cf);
cplx loschmidt_oracle(double k, const CouplingSet& ci, const CouplingSet& cf, double t);
cplx loschmidt_biorthogonal(double k, const CouplingSet& ci, const CouplingSet& cf, double t);

struct LoschmidtResult {
  CMatrix gk;  // rows follow k_grid, columns follow t_grid
  std::vector<double> return_rate;
  bool log_scale = true;
  int distinct_momenta = 0;
};

LoschmidtResult return_rate(const QuenchProtocol& p, int threads = 0);

std::vector<cplx> fisher_zeros(double k, const CouplingSet& ci, const CouplingSet& cf, int n_min,
                               int n_max);

enum class Side { Plus, Minus };

struct CriticalEntry {
  int n = 0;
  Side side = Side::Plus;
  double k_c = 0.0;
  double t_c = 0.0;
  double residual = 0.0;
};

struct CriticalTimes {
  std::vector<CriticalEntry> entries;
};

// Left side of the critical-momentum condition for branch n.
double critical_condition(double k, const CouplingSet& ci, const CouplingSet& cf, int n);
double critical_time(double k, const CouplingSet& ci, const CouplingSet& cf, int n);

CriticalTimes critical_set(const QuenchProtocol& p, int n_min = 0, int n_max = 9);

struct PgpField {
  RMatrix phi_total;
  RMatrix phi_dyn;
  RMatrix phi_pgp;
  std::vector<std::pair<int, int>> holes;  // (k index, t index) where g vanishes
};

PgpField pgp_field(const QuenchProtocol& p, int threads = 0);

struct DtopSeries {
  std::vector<double> t;
  std::vector<double> dtop_plus;
  std::vector<double> dtop_minus;
  long refinements = 0;
};

DtopSeries dtop(const QuenchProtocol& p, int threads = 0);
DtopSeries dtop(const QuenchProtocol& p, const PgpField& field, int threads = 0);

// Times where the discrete second difference of RR has a negative local
// minimum exceeding sharpness times the median |second difference| within
// +-window samples, i.e. an upward kink.
std::vector<double> rr_cusp_times(const std::vector<double>& t, const std::vector<double>& rr,
                                  double sharpness = 10.0, int window = 25);

}  // namespace nhqb
