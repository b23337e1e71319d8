#pragma once

#include <stdexcept>
#include <string>

namespace edepth {

/// Input outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Requested one-photon probability cannot be reached by any state of the family.
class infeasible_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Stationarity system collapses for the given seed (b = 0 or c = 0).
class branch_degeneracy_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Enumeration or sampling request exceeds a hard cap.
class size_error : public std::length_error {
public:
  using std::length_error::length_error;
};

/// Input outside the regime of an asymptotic expansion.
class regime_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// (p1, p2) lies above the separable frontier, where no depth can be certified.
class undetermined_region : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A post-condition check on computed results failed (minimizer failure).
class consistency_error : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Atom-number fit has a flat residual in N.
class fit_degenerate : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Too many Monte Carlo samples were infeasible or undetermined.
class data_inconsistent : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace edepth
