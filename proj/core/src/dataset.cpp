#include "rcgrid/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "rcgrid/errors.hpp"

namespace rcgrid {

Matrix ChoiceDataset::one_hot() const {
  Matrix y = Matrix::Zero(size(), J + 1);
  for (Index i = 0; i < size(); ++i) y(i, choice[static_cast<std::size_t>(i)]) = 1.0;
  return y;
}

void ChoiceDataset::validate() const {
  if (J < 1 || K < 1) throw InvalidArgument("ChoiceDataset: J and K must be positive");
  if (x.rows() != size() || x.cols() != J * K) throw DimensionError("ChoiceDataset: covariate matrix has wrong shape");
  for (int c : choice) {
    if (c < 0 || c > J) throw InvalidArgument("ChoiceDataset: choice outside 0..J");
  }
  if (!x.allFinite()) throw InvalidArgument("ChoiceDataset: non-finite covariate");
}

ChoiceDataset simulate_dataset(const AlphaSampler& sample_alpha, Index n, Index J, Index K, Rng& rng) {
  if (n < 1) throw InvalidArgument("simulate_dataset: n must be >= 1");
  if (J < 1 || K < 1) throw InvalidArgument("simulate_dataset: J and K must be >= 1");
  ChoiceDataset data;
  data.J = J;
  data.K = K;
  data.choice.resize(static_cast<std::size_t>(n));
  data.x.resize(n, J * K);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector prob(J + 1);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < J * K; ++c) data.x(i, c) = unif(rng);
    const Vector alpha = sample_alpha(rng);
    if (alpha.size() != K) throw DimensionError("simulate_dataset: sampler returned wrong dimension");
    logit_choice_prob_into(data.covariates(i), alpha.data(), prob);
    const double u = unif(rng);
    int chosen = static_cast<int>(J);
    double cum = 0.0;
    for (Index j = 0; j <= J; ++j) {
      cum += prob[j];
      if (u < cum) {
        chosen = static_cast<int>(j);
        break;
      }
    }
    data.choice[static_cast<std::size_t>(i)] = chosen;
  }
  return data;
}

ChoiceDataset simulate_dataset(const GaussianMixtureDGP& dgp, Index n, Index J, Index K, Rng& rng) {
  if (dgp.dim() != K) throw DimensionError("simulate_dataset: DGP dimension differs from K");
  return simulate_dataset([&dgp](Rng& r) { return dgp.sample(r); }, n, J, K, rng);
}

void write_dataset_csv(std::ostream& out, const ChoiceDataset& data) {
  data.validate();
  out << "id,y";
  for (Index j = 1; j <= data.J; ++j) {
    for (Index k = 1; k <= data.K; ++k) out << ",x_" << j << '_' << k;
  }
  out << '\n';
  char buf[32];
  for (Index i = 0; i < data.size(); ++i) {
    out << (i + 1) << ',' << data.choice[static_cast<std::size_t>(i)];
    for (Index c = 0; c < data.x.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data.x(i, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

template <class T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(field) + "'", line_no);
  }
  return value;
}

}  // namespace

ChoiceDataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header row", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "y") {
    throw ParseError("header must start with id,y followed by x_j_k columns", line_no);
  }
  // Columns are x_1_1..x_1_K, x_2_1, ...: K is the run length of j == 1.
  Index K = 0;
  while (static_cast<std::size_t>(2 + K) < header.size() && header[2 + K].starts_with("x_1_")) ++K;
  const Index covariate_cols = static_cast<Index>(header.size()) - 2;
  if (K == 0 || covariate_cols % K != 0) throw ParseError("cannot infer J x K from header", line_no);
  const Index J = covariate_cols / K;
  for (Index j = 1; j <= J; ++j) {
    for (Index k = 1; k <= K; ++k) {
      const std::string expected = "x_" + std::to_string(j) + "_" + std::to_string(k);
      if (header[static_cast<std::size_t>(2 + (j - 1) * K + (k - 1))] != expected) {
        throw ParseError("expected column " + expected, line_no);
      }
    }
  }

  ChoiceDataset data;
  data.J = J;
  data.K = K;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()),
                       line_no);
    }
    parse_number<long long>(fields[0], line_no, "id");
    const int y = parse_number<int>(fields[1], line_no, "choice");
    if (y < 0 || y > J) throw ParseError("choice " + std::to_string(y) + " outside 0.." + std::to_string(J), line_no);
    data.choice.push_back(y);
    for (std::size_t c = 2; c < fields.size(); ++c) {
      const double v = parse_number<double>(fields[c], line_no, "covariate");
      if (!std::isfinite(v)) throw ParseError("non-finite covariate", line_no);
      values.push_back(v);
    }
  }
  if (data.choice.empty()) throw ParseError("no data rows", line_no);
  data.x = Eigen::Map<const RowMatrix>(values.data(), static_cast<Index>(data.choice.size()), J * K);
  return data;
}

}  // namespace rcgrid
