#include "dmeg/stream.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string_view>

#include "dmeg/seeding.hpp"

namespace dmeg {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_real(std::string_view field) {
  if (field.empty()) return std::nullopt;
  const std::string s(field);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

class CsvStream final : public SampleStream {
 public:
  CsvStream(const std::filesystem::path& path, int label_column, std::vector<int> feature_columns,
            std::optional<std::uint64_t> limit)
      : in_(path), path_(path.string()), limit_(limit) {
    if (!in_) throw std::runtime_error("cannot open csv file " + path_);
    std::string first;
    while (std::getline(in_, first)) {
      ++line_no_;
      if (!trim(first).empty()) break;
    }
    if (trim(first).empty()) throw std::runtime_error("csv file " + path_ + " is empty");
    const auto fields = split_commas(first);
    ncols_ = fields.size();
    const int label = label_column < 0 ? static_cast<int>(ncols_) + label_column : label_column;
    if (label < 0 || static_cast<std::size_t>(label) >= ncols_) {
      throw std::runtime_error("label column " + std::to_string(label_column) + " out of range");
    }
    label_col_ = static_cast<std::size_t>(label);
    if (feature_columns.empty()) {
      for (std::size_t c = 0; c < ncols_; ++c) {
        if (c != label_col_) feature_cols_.push_back(c);
      }
    } else {
      for (int c : feature_columns) {
        if (c < 0 || static_cast<std::size_t>(c) >= ncols_) {
          throw std::runtime_error("feature column " + std::to_string(c) + " out of range");
        }
        feature_cols_.push_back(static_cast<std::size_t>(c));
      }
    }
    if (feature_cols_.empty()) throw std::runtime_error("csv stream has no feature columns");
    const bool header = std::any_of(fields.begin(), fields.end(),
                                    [](std::string_view f) { return !parse_real(f); });
    if (!header) pending_ = first;
  }

  std::optional<Sample> next() override {
    if (limit_ && produced_ >= *limit_) return std::nullopt;
    std::string line;
    if (pending_) {
      line = std::move(*pending_);
      pending_.reset();
    } else {
      do {
        if (!std::getline(in_, line)) return std::nullopt;
        ++line_no_;
      } while (trim(line).empty());
    }
    const auto fields = split_commas(line);
    if (fields.size() != ncols_) {
      throw std::runtime_error(path_ + ": row " + std::to_string(line_no_) + " has " +
                               std::to_string(fields.size()) + " columns, expected " +
                               std::to_string(ncols_));
    }
    Sample s;
    s.index = produced_;
    s.features.reserve(feature_cols_.size());
    for (std::size_t c : feature_cols_) {
      const auto v = parse_real(fields[c]);
      if (!v) {
        throw std::runtime_error(path_ + ": row " + std::to_string(line_no_) + ", column " +
                                 std::to_string(c) + ": cannot parse '" + std::string(fields[c]) +
                                 "' as a real");
      }
      s.features.push_back(*v);
    }
    const auto y = parse_real(fields[label_col_]);
    if (!y || (*y != 0.0 && *y != 1.0)) {
      throw std::runtime_error(path_ + ": row " + std::to_string(line_no_) + ": label '" +
                               std::string(fields[label_col_]) + "' is not 0 or 1");
    }
    s.label = static_cast<int>(*y);
    ++produced_;
    return s;
  }

  std::size_t dim() const override { return feature_cols_.size(); }

 private:
  std::ifstream in_;
  std::string path_;
  std::optional<std::uint64_t> limit_;
  std::optional<std::string> pending_;
  std::size_t ncols_ = 0;
  std::size_t label_col_ = 0;
  std::vector<std::size_t> feature_cols_;
  std::uint64_t line_no_ = 0;
  std::uint64_t produced_ = 0;
};

class StationaryStream final : public SampleStream {
 public:
  explicit StationaryStream(const StationaryParams& p)
      : params_(p),
        direction_(stationary_direction(p.seed, p.dim)),
        rng_(derive_seed(p.seed, "stationary.samples")) {
    if (p.dim == 0) throw std::invalid_argument("stationary stream needs dim >= 1");
    if (!(p.class_prior > 0.0 && p.class_prior < 1.0)) {
      throw std::invalid_argument("class_prior must lie in (0, 1)");
    }
    if (!(p.separation >= 0.0)) throw std::invalid_argument("separation must be non-negative");
  }

  std::optional<Sample> next() override {
    if (produced_ >= params_.length) return std::nullopt;
    Sample s;
    s.index = produced_++;
    s.label = coin_(rng_) < params_.class_prior ? 1 : 0;
    const double sign = s.label == 1 ? 1.0 : -1.0;
    s.features.resize(params_.dim);
    for (std::size_t i = 0; i < params_.dim; ++i) {
      s.features[i] = sign * params_.separation * direction_[i] + normal_(rng_);
    }
    return s;
  }

  std::size_t dim() const override { return params_.dim; }

 private:
  StationaryParams params_;
  std::vector<double> direction_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> coin_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t produced_ = 0;
};

class ConceptDriftStream final : public SampleStream {
 public:
  explicit ConceptDriftStream(const ConceptDriftParams& p)
      : params_(p), rng_(derive_seed(p.seed, "drift.samples")) {
    if (p.dim == 0) throw std::invalid_argument("concept drift stream needs dim >= 1");
    if (p.num_segments == 0) throw std::invalid_argument("num_segments must be >= 1");
    teachers_.reserve(p.num_segments);
    for (std::size_t s = 0; s < p.num_segments; ++s) {
      teachers_.emplace_back(derive_seed(p.seed, "drift.teacher", s), p.dim, p.teacher_depth,
                             p.teacher_width, p.teacher_logit_scale);
    }
  }

  std::optional<Sample> next() override {
    if (produced_ >= params_.length) return std::nullopt;
    Sample s;
    s.index = produced_;
    s.features.resize(params_.dim);
    for (double& v : s.features) v = normal_(rng_);
    const auto& teacher = teachers_[segment_of(produced_, params_.length, params_.num_segments)];
    const double z = teacher.logit(s.features);
    const double prob = 1.0 / (1.0 + std::exp(-z));
    s.label = coin_(rng_) < prob ? 1 : 0;
    ++produced_;
    return s;
  }

  std::size_t dim() const override { return params_.dim; }

 private:
  ConceptDriftParams params_;
  std::vector<Teacher> teachers_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> coin_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t produced_ = 0;
};

}  // namespace

std::unique_ptr<SampleStream> open_csv_stream(const std::filesystem::path& path, int label_column,
                                              std::vector<int> feature_columns,
                                              std::optional<std::uint64_t> limit) {
  return std::make_unique<CsvStream>(path, label_column, std::move(feature_columns), limit);
}

std::vector<double> stationary_direction(std::uint64_t seed, std::size_t dim) {
  std::mt19937_64 rng(derive_seed(seed, "stationary.direction"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> u(dim);
  double norm = 0.0;
  do {
    for (double& v : u) v = normal(rng);
    norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
  } while (norm < 1e-12);
  for (double& v : u) v /= norm;
  return u;
}

std::unique_ptr<SampleStream> gen_stationary(const StationaryParams& params) {
  return std::make_unique<StationaryStream>(params);
}

Teacher::Teacher(std::uint64_t seed, std::size_t dim, std::size_t depth, std::size_t width,
                 double logit_scale) {
  if (dim == 0 || width == 0) throw std::invalid_argument("teacher dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  widths_.push_back(dim);
  for (std::size_t l = 0; l <= depth; ++l) {
    const std::size_t in = widths_.back();
    const std::size_t out = l == depth ? 1 : width;
    const double stddev = std::sqrt(2.0 / static_cast<double>(in));
    std::vector<double> w(in * out);
    for (double& v : w) v = stddev * normal(rng);
    std::vector<double> b(out);
    for (double& v : b) v = 0.1 * normal(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
    widths_.push_back(out);
  }

  // Re-center on a probe sample so the median logit is 0, then fix the spread.
  std::mt19937_64 probe_rng(splitmix64(seed ^ fnv1a("teacher.probe")));
  constexpr std::size_t kProbe = 10000;
  std::vector<double> logits(kProbe);
  std::vector<double> x(dim);
  for (double& z : logits) {
    for (double& v : x) v = normal(probe_rng);
    z = raw_logit(x);
  }
  std::vector<double> sorted = logits;
  std::nth_element(sorted.begin(), sorted.begin() + kProbe / 2, sorted.end());
  offset_ = sorted[kProbe / 2];
  if (logit_scale > 0.0) {
    double var = 0.0;
    for (double z : logits) var += (z - offset_) * (z - offset_);
    const double sd = std::sqrt(var / kProbe);
    scale_ = sd > 1e-12 ? logit_scale / sd : 1.0;
  }
}

double Teacher::raw_logit(const std::vector<double>& x) const {
  std::vector<double> h = x;
  std::vector<double> next;
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    next.assign(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      double acc = biases_[l][r];
      const double* row = &weights_[l][r * in];
      for (std::size_t c = 0; c < in; ++c) acc += row[c] * h[c];
      next[r] = (l + 1 < layers) ? std::max(acc, 0.0) : acc;
    }
    h.swap(next);
  }
  return h[0];
}

double Teacher::logit(const std::vector<double>& x) const { return scale_ * (raw_logit(x) - offset_); }

std::unique_ptr<SampleStream> gen_concept_drift(const ConceptDriftParams& params) {
  return std::make_unique<ConceptDriftStream>(params);
}

std::unique_ptr<SampleStream> make_stream(const StreamSpec& spec) {
  switch (spec.kind) {
    case StreamKind::csv:
      return open_csv_stream(spec.path, spec.label_column, spec.feature_columns,
                             spec.length > 0 ? std::optional<std::uint64_t>(spec.length) : std::nullopt);
    case StreamKind::stationary_synthetic:
      return gen_stationary({spec.seed, spec.dim, spec.length, spec.class_prior, spec.separation});
    case StreamKind::concept_drift_synthetic:
      return gen_concept_drift({spec.seed, spec.dim, spec.length, spec.num_segments,
                                spec.teacher_depth, spec.teacher_width, spec.teacher_logit_scale});
  }
  throw std::invalid_argument("unknown stream kind");
}

std::size_t segment_of(std::uint64_t index, std::uint64_t length, std::size_t num_segments) {
  // Segment s starts at floor(length * s / num_segments).
  std::size_t s = 0;
  while (s + 1 < num_segments &&
         index >= static_cast<std::uint64_t>((static_cast<unsigned __int128>(length) * (s + 1)) /
                                             num_segments)) {
    ++s;
  }
  return s;
}

Normalizer::Normalizer(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

std::vector<double> Normalizer::variance() const {
  if (count_ < 2) return std::vector<double>(mean_.size(), 1.0);
  std::vector<double> var(mean_.size());
  for (std::size_t i = 0; i < var.size(); ++i) var[i] = m2_[i] / static_cast<double>(count_);
  return var;
}

Sample Normalizer::normalize(const Sample& raw) {
  if (raw.features.size() != mean_.size()) {
    throw std::invalid_argument("normalize: sample has dimension " +
                                std::to_string(raw.features.size()) + ", expected " +
                                std::to_string(mean_.size()));
  }
  Sample out = raw;
  const auto var = variance();
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    out.features[i] = (raw.features[i] - mean_[i]) / std::sqrt(var[i] + kEpsilon);
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double delta = raw.features[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (raw.features[i] - mean_[i]);
  }
  return out;
}

}  // namespace dmeg
