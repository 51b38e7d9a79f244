#pragma once

#include <optional>
#include <vector>

#include "anm/types.hpp"

namespace anm {

struct Peak {
  double phi = 0.0;
  double psi = 0.0;
  cplx alpha = 0.0;
  PathClass cls = PathClass::target;
  double value = 0.0;  // pseudo-spectrum height
};

/// MUSIC pseudo-spectrum sampled on a uniform (phi, psi) grid over [0,1)^2.
struct Spectrum {
  int grid_phi = 0;
  int grid_psi = 0;
  std::vector<double> values;  // index i_phi * grid_psi + i_psi
  RVector eigenvalues;         // of the covariance surrogate, descending
  int k_hat = 0;

  double at(int i_phi, int i_psi) const { return values[static_cast<std::size_t>(i_phi) * grid_psi + i_psi]; }
  double phi(int i_phi) const { return static_cast<double>(i_phi) / grid_phi; }
  double psi(int i_psi) const { return static_cast<double>(i_psi) / grid_psi; }
};

struct EstimateReport {
  std::vector<Peak> peaks;
  int k_hat = 0;
  int shortfall = 0;  // k_hat minus the number of local maxima actually found
  bool ill_conditioned = false;  // amplitude fit relied on the ridge term
  std::optional<Spectrum> spectrum;

  int count(PathClass c) const {
    int n = 0;
    for (const auto& p : peaks) n += p.cls == c ? 1 : 0;
    return n;
  }
  int n_targets() const { return count(PathClass::target); }
};

}  // namespace anm
