#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace regal {

/// Base class for all library errors.
class error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad probabilities, schema violations, parameter ranges.
/// The message names the offending field (path-to-field for file input).
class validation_error : public error {
  using error::error;
};

/// Structurally invalid market model (e.g. reducible chain).
class model_error : public error {
  using error::error;
};

/// An operation was evaluated outside its mathematical domain.  When the
/// recursion map is undefined at specific states, `states()` lists them.
class domain_error : public error {
public:
  explicit domain_error(const std::string& what, std::vector<int> states = {})
      : error(what), states_(std::move(states)) {}
  const std::vector<int>& states() const noexcept { return states_; }

private:
  std::vector<int> states_;
};

/// A portfolio produced a nonpositive gross return on some atom.
class infeasible_return_error : public error {
  using error::error;
};

/// Non-finite intermediate quantity (overflow in a weighted-transition entry).
class numerical_error : public error {
  using error::error;
};

/// Power iteration failed to converge.
class spectral_error : public error {
  using error::error;
};

/// Fixed-point iteration hit its step limit.  Carries the last two iterates
/// and the tail of the residual trajectory for post-mortem.
class iteration_limit_error : public error {
public:
  iteration_limit_error(const std::string& what, std::vector<double> last,
                        std::vector<double> prev, std::vector<double> residual_tail)
      : error(what),
        last_(std::move(last)),
        prev_(std::move(prev)),
        residual_tail_(std::move(residual_tail)) {}
  const std::vector<double>& last_iterate() const noexcept { return last_; }
  const std::vector<double>& previous_iterate() const noexcept { return prev_; }
  const std::vector<double>& residual_tail() const noexcept { return residual_tail_; }

private:
  std::vector<double> last_, prev_, residual_tail_;
};

}  // namespace regal
