#pragma once

// Sequential sample suppliers. Every stream is a single-consumer iterator
// that yields samples in order and never looks ahead.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dmeg {

struct Sample {
  std::vector<double> features;
  int label = 0;
  std::uint64_t index = 0;
};

class SampleStream {
 public:
  virtual ~SampleStream() = default;
  /// Next sample, or nullopt once the stream is exhausted.
  virtual std::optional<Sample> next() = 0;
  virtual std::size_t dim() const = 0;
};

enum class StreamKind { csv, stationary_synthetic, concept_drift_synthetic };

struct StreamSpec {
  StreamKind kind = StreamKind::stationary_synthetic;
  std::uint64_t length = 0;  // T; for csv this is the row limit
  std::uint64_t seed = 0;

  // csv
  std::filesystem::path path;
  int label_column = -1;            // negative counts from the end
  std::vector<int> feature_columns;  // empty: every column but the label

  // synthetic
  std::size_t dim = 18;
  double class_prior = 0.5;  // P(label = 1), stationary only
  double separation = 1.0;   // stationary only
  std::size_t num_segments = 3;
  std::size_t teacher_depth = 8;
  std::size_t teacher_width = 32;
  /// Standard deviation of the teacher logit after re-centering; <= 0 keeps the raw scale.
  double teacher_logit_scale = 4.0;
};

/// Comma separated, optional header (detected by a non-numeric first row).
/// Errors name the 1-based line number of the offending row.
std::unique_ptr<SampleStream> open_csv_stream(const std::filesystem::path& path, int label_column,
                                              std::vector<int> feature_columns,
                                              std::optional<std::uint64_t> limit = std::nullopt);

struct StationaryParams {
  std::uint64_t seed = 0;
  std::size_t dim = 2;
  std::uint64_t length = 0;
  double class_prior = 0.5;
  double separation = 1.0;
};

/// Two-Gaussian mixture: label ~ Bernoulli(class_prior), x ~ N(+-separation * u, I)
/// with + for label 1 and u a seed-determined unit vector.
std::unique_ptr<SampleStream> gen_stationary(const StationaryParams& params);

/// The unit direction used by gen_stationary for this seed and dimension.
std::vector<double> stationary_direction(std::uint64_t seed, std::size_t dim);

struct ConceptDriftParams {
  std::uint64_t seed = 0;
  std::size_t dim = 50;
  std::uint64_t length = 0;
  std::size_t num_segments = 3;
  std::size_t teacher_depth = 8;
  std::size_t teacher_width = 32;
  double teacher_logit_scale = 4.0;
};

/// Random deep ReLU teacher used for one drift segment.
class Teacher {
 public:
  Teacher(std::uint64_t seed, std::size_t dim, std::size_t depth, std::size_t width,
          double logit_scale);
  double logit(const std::vector<double>& x) const;

 private:
  double raw_logit(const std::vector<double>& x) const;

  std::vector<std::vector<double>> weights_;  // row-major per layer
  std::vector<std::vector<double>> biases_;
  std::vector<std::size_t> widths_;
  double offset_ = 0.0;
  double scale_ = 1.0;
};

/// Features ~ N(0, I); segment s (boundaries at floor(T s / num_segments))
/// labels with an independent teacher: label = 1 w.p. logistic(teacher_s(x)).
std::unique_ptr<SampleStream> gen_concept_drift(const ConceptDriftParams& params);

/// Builds the stream a spec describes; synthetic streams take their seed from the spec.
std::unique_ptr<SampleStream> make_stream(const StreamSpec& spec);

/// Segment index of round `index` (0-based) for a stream of `length` split
/// into `num_segments`; the last segment absorbs the remainder.
std::size_t segment_of(std::uint64_t index, std::uint64_t length, std::size_t num_segments);

/// Online standardization with Welford statistics. Each sample is scaled by
/// the statistics of the samples strictly before it, then folded in.
class Normalizer {
 public:
  static constexpr double kEpsilon = 1e-8;

  explicit Normalizer(std::size_t dim);

  Sample normalize(const Sample& raw);

  std::size_t dim() const { return mean_.size(); }
  std::uint64_t count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  /// Population variance; 1 before two samples have been seen.
  std::vector<double> variance() const;

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::uint64_t count_ = 0;
};

}  // namespace dmeg
