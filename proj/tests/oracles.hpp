#pragma once

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "nhqb/model.hpp"

namespace oracle {

using nhqb::cplx;
using nhqb::CMatrix;
using nhqb::RMatrix;

inline constexpr double kPi = 3.14159265358979323846;

struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(unsigned long seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  double momentum() { return uniform(-kPi, kPi); }
  nhqb::CouplingSet couplings(double delta_lo = -0.95, double delta_hi = 0.95, double theta_hi = 1.0) {
    return nhqb::derive_couplings(uniform(0.5, 2.0), uniform(delta_lo, delta_hi), uniform(0.0, theta_hi));
  }
};

// The two 8x8 quadrature matrices for N = 2, transcribed entry by entry.
inline RMatrix fixture_hx(double v, double wr, double wl) {
  const double s = 0.5 * (wr + wl), d = 0.5 * (wl - wr);
  RMatrix h(8, 8);
  h << 0, v, 0, 0, 0, 0, 0, 0,
      -v, 0, 0, 0, -s, 0, d, 0,
      0, 0, 0, -v, 0, 0, 0, 0,
      0, 0, v, 0, d, 0, s, 0,
      0, s, 0, d, 0, v, 0, 0,
      0, 0, 0, 0, -v, 0, 0, 0,
      0, d, 0, -s, 0, 0, 0, -v,
      0, 0, 0, 0, 0, 0, v, 0;
  return h;
}

inline RMatrix fixture_hp(double v, double wr, double wl) {
  const double s = 0.5 * (wr + wl), d = 0.5 * (wl - wr);
  RMatrix h(8, 8);
  h << 0, v, 0, 0, 0, 0, 0, 0,
      -v, 0, 0, 0, -s, 0, -d, 0,
      0, 0, 0, -v, 0, 0, 0, 0,
      0, 0, v, 0, -d, 0, s, 0,
      0, s, 0, -d, 0, v, 0, 0,
      0, 0, 0, 0, -v, 0, 0, 0,
      0, -d, 0, -s, 0, 0, 0, -v,
      0, 0, 0, 0, 0, 0, v, 0;
  return h;
}

// Block Fourier transform of a cell-major 8N x 8N Nambu matrix:
// G(k) = sum_j G[cell 0, cell j] e^{i j k}.
inline CMatrix fourier_block(const CMatrix& g, int cells, double k) {
  const int n = 4 * cells;
  CMatrix out = CMatrix::Zero(8, 8);
  for (int j = 0; j < cells; ++j) {
    const cplx phase = std::exp(cplx(0.0, 1.0) * (static_cast<double>(j) * k));
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        const int row = (a < 4 ? 0 : n) + (a % 4);
        const int col = (b < 4 ? 0 : n) + 4 * j + (b % 4);
        out(a, b) += g(row, col) * phase;
      }
  }
  return out;
}

// exp(A) by scaling and squaring with a truncated Taylor series.
inline CMatrix expm(const CMatrix& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scaled = norm;
  while (scaled > 0.25) {
    scaled *= 0.5;
    ++squarings;
  }
  const CMatrix b = a / std::pow(2.0, squarings);
  CMatrix term = CMatrix::Identity(a.rows(), a.cols());
  CMatrix sum = term;
  for (int n = 1; n < 30; ++n) {
    term = term * b / static_cast<double>(n);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

// Loschmidt amplitude by direct matrix exponentiation: the initial state is the
// right eigenvector of [[0, a], [b, 0]] with eigenvalue -sqrt(ab), paired with
// the matching left eigenvector.
inline cplx loschmidt_expm(double k, const nhqb::CouplingSet& ci, const nhqb::CouplingSet& cf, double t) {
  const Eigen::Matrix2cd hi = nhqb::hamiltonian_nssh2_k(k, ci);
  const cplx a = hi(0, 1), b = hi(1, 0);
  const cplx e = std::sqrt(a * b);
  Eigen::Vector2cd r(a, -e);          // (a, -e) solves [[0,a],[b,0]] r = -e r
  Eigen::RowVector2cd l(b, -e);       // l [[0,a],[b,0]] = -e l
  const cplx norm = (l * r)(0, 0);
  const CMatrix u = expm(cplx(0.0, -t) * CMatrix(nhqb::hamiltonian_nssh2_k(k, cf)));
  return (l * u * r)(0, 0) / norm;
}

inline double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace oracle
