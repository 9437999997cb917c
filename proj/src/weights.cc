#include "lmkit/weights.hh"

#include <cmath>
#include <istream>
#include <ostream>

#include "lmkit/error.hh"
#include "lmkit/io.hh"

namespace lmkit {

WeightVector WeightVector::uniform(std::vector<std::string> labels) {
  WeightVector w;
  w.values.assign(labels.size(), labels.empty() ? 0.0 : 1.0 / static_cast<double>(labels.size()));
  w.labels = std::move(labels);
  return w;
}

std::optional<std::size_t> WeightVector::index_of(const std::string &label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  return std::nullopt;
}

double WeightVector::at(const std::string &label) const {
  auto i = index_of(label);
  if (!i) throw Error(ErrorCode::kLabelMismatch, "no weight for label '" + label + "'");
  return values[*i];
}

void WeightVector::validate() const {
  if (labels.size() != values.size()) throw Error(ErrorCode::kBadWeights, "labels and values differ in length");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kBadWeights, "non-finite weight");
  }
}

bool WeightVector::on_simplex(double tol) const {
  double sum = 0;
  for (double v : values) {
    if (!(v >= 0)) return false;
    sum += v;
  }
  return !values.empty() && std::fabs(sum - 1) <= tol;
}

void write_weights(const WeightVector &w, std::ostream &out) {
  for (std::size_t i = 0; i < w.size(); ++i) out << w.labels[i] << '\t' << format_shortest(w.values[i]) << '\n';
}

WeightVector read_weights(std::istream &in) {
  WeightVector w;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorCode::kParseError, "weights line " + std::to_string(line_no) + ": expected label<TAB>value");
    }
    w.labels.push_back(line.substr(0, tab));
    w.values.push_back(parse_double(std::string_view(line).substr(tab + 1), line_no));
  }
  w.validate();
  return w;
}

WeightVector read_weights_file(const std::string &path) {
  std::ifstream in = open_input(path);
  return read_weights(in);
}

}  // namespace lmkit
