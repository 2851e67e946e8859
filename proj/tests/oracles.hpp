// Test-only reference implementations, kept independent of the library
// code paths they are used to check.
#pragma once

#include <cstdint>
#include <vector>

#include "ewlab/numkit.hpp"

namespace oracles {

// Plain-loop cosine in extended precision.
double cosine_highprec(const ewlab::Vector& a, const ewlab::Vector& b);

// Sup-distance between empirical CDFs evaluated point by point over the
// pooled values; uses the same count/n arithmetic as the naive
// definition.
double ks_statistic_bruteforce(const std::vector<double>& a,
                               const std::vector<double>& b);

// Two-sample permutation test p-value for the KS statistic:
// P(D_perm >= D_obs) over random relabelings.
double ks_permutation_p(const std::vector<double>& a,
                        const std::vector<double>& b, int resamples,
                        std::uint64_t seed);

struct Spectrum {
  std::vector<double> values;           // descending
  std::vector<ewlab::Vector> vectors;   // aligned, unit length
};

// Covariance of row samples in long double + cyclic Jacobi rotations.
Spectrum covariance_eigen_jacobi(const std::vector<ewlab::Vector>& data);

// Largest principal angle (radians) between the spans of two orthonormal
// sets of equal size.
double max_subspace_angle(const std::vector<ewlab::Vector>& u,
                          const std::vector<ewlab::Vector>& v);

std::vector<double> zipf_pmf(int vocab, double exponent);

// Spearman rank correlation (no tie handling; inputs must be distinct).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace oracles
