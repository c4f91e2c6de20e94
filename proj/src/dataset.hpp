#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace fiddle {

/// Observations (y_i, T_i, x_i) with x_i in R^p, plus optional oracle columns
/// carried through from synthetic data (needed by the oracle estimators).
struct Dataset {
  std::vector<double> y;
  std::vector<int> t;  // 0/1 treatment indicators
  num::Matrix x;       // n x p

  // Optional, same length as y when present.
  std::vector<double> pi_star;
  std::vector<double> mu0_star;
  std::vector<double> mu1_star;

  std::size_t n() const { return y.size(); }
  std::size_t p() const { return x.cols(); }
  std::size_t n_treated() const;
  std::size_t n_control() const;
  bool has_pi_star() const { return pi_star.size() == y.size() && !y.empty(); }
  bool has_outcome_oracles() const {
    return mu0_star.size() == y.size() && mu1_star.size() == y.size() && !y.empty();
  }

  /// Shape/finiteness/label sanity; throws Error on violation.
  void validate() const;
};

/// Reads the CSV schema `y,T,x1,...,xp[,pi_star[,mu0_star,mu1_star]]`.
/// Malformed input is reported with 1-based row/column positions.
Dataset load_csv(const std::string& path);

/// Writes the same schema with 17-significant-digit decimals so values
/// round-trip exactly. Oracle columns are emitted when present and
/// `include_oracle` is set.
void save_csv(const Dataset& data, const std::string& path, bool include_oracle = true);

}  // namespace fiddle
