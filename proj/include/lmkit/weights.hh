#ifndef LMKIT_WEIGHTS_HH
#define LMKIT_WEIGHTS_HH

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lmkit {

// Labeled real coefficients: mixture weights over component models, or
// log-linear weights over lattice feature scores.
struct WeightVector {
  std::vector<std::string> labels;
  std::vector<double> values;

  static WeightVector uniform(std::vector<std::string> labels);

  std::size_t size() const { return values.size(); }
  std::optional<std::size_t> index_of(const std::string &label) const;
  // Value for `label`; throws LabelMismatch when absent.
  double at(const std::string &label) const;

  // Finite values, matching label count.  Throws BadWeights otherwise.
  void validate() const;
  // Nonnegative and summing to 1 within `tol`.
  bool on_simplex(double tol = 1e-9) const;

  bool operator==(const WeightVector &) const = default;
};

// `label<TAB>value` lines.
void write_weights(const WeightVector &w, std::ostream &out);
WeightVector read_weights(std::istream &in);
WeightVector read_weights_file(const std::string &path);

}  // namespace lmkit

#endif  // LMKIT_WEIGHTS_HH
