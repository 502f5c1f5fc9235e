#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace agsfh {

using Index = Eigen::Index;

/// One modality's features: d rows (feature dimension) by N columns
/// (instances), so each instance is a contiguous column.
struct FeatureMatrix {
  int modality_id = 0;
  Eigen::MatrixXd data;

  Index feature_dim() const { return data.rows(); }
  Index count() const { return data.cols(); }
};

/// Category ids per instance. A single-label dataset stores one id per
/// instance; two instances are relevant to each other when they share at
/// least one id.
class Labels {
 public:
  Labels() = default;
  explicit Labels(std::vector<std::vector<int>> per_instance);
  static Labels single(std::span<const int> ids);

  Index size() const { return static_cast<Index>(ids_.size()); }
  std::span<const int> of(Index i) const { return ids_[static_cast<std::size_t>(i)]; }
  bool relevant(Index a, const Labels& other, Index b) const;
  Labels select(std::span<const Index> indices) const;

  bool operator==(const Labels&) const = default;

 private:
  std::vector<std::vector<int>> ids_;  // each sorted, unique
};

struct Split {
  std::vector<Index> training;
  std::vector<Index> query;

  /// Everything that is not a query (the retrieval database).
  std::vector<Index> database(Index count) const;
};

struct Dataset {
  std::vector<FeatureMatrix> modalities;
  std::optional<Labels> labels;
  Split split;

  Index count() const { return modalities.empty() ? 0 : modalities.front().count(); }
  Index modality_count() const { return static_cast<Index>(modalities.size()); }

  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const;
};

/// Anchors drawn from the training split, with their per-modality columns.
struct AnchorSet {
  std::vector<Index> indices;
  std::vector<Eigen::MatrixXd> anchors;  // one d_m x P matrix per modality
};

enum class FeatureFormat { kCsv, kBinary };

/// `.csv` selects CSV, anything else the binary format.
FeatureFormat format_for(const std::filesystem::path& path);

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format,
                            int modality_id = 0);
void save_features(const std::filesystem::path& path, const FeatureMatrix& features,
                   FeatureFormat format);

FeatureMatrix read_features_csv(std::istream& in, int modality_id = 0);
FeatureMatrix read_features_binary(std::istream& in, int modality_id = 0);
void write_features_csv(std::ostream& out, const FeatureMatrix& features);
void write_features_binary(std::ostream& out, const FeatureMatrix& features);

Split load_split(const std::filesystem::path& path);
void save_split(const std::filesystem::path& path, const Split& split);
Split read_split(std::istream& in);
void write_split(std::ostream& out, const Split& split);

/// One line per instance, whitespace-separated integer category ids.
Labels load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const Labels& labels);

/// Uniform sample of `count` distinct training indices (partial Fisher-Yates
/// over the training split, in split order).
AnchorSet sample_anchors(const Dataset& dataset, Index count, std::uint64_t seed);

struct SynthSpec {
  int clusters = 4;
  Index count = 2000;
  std::vector<Index> dims{16, 24};
  double noise = 0.1;
  std::uint64_t seed = 0;
  double query_fraction = 0.1;
};

/// Balanced Gaussian clusters seen through independent random linear maps.
///
/// Cluster c has latent centre e_c in R^C; instance i belongs to cluster
/// i mod C and has latent z_i = e_c + noise * g_i. Modality m observes
/// x_i = A_m z_i + noise * n_i with A_m a d_m x C standard normal matrix.
/// A random `query_fraction` of instances forms the query split; the rest is
/// the training split. All randomness comes from one Rng(seed) in the order
/// A_0..A_{M-1}, latents, per-modality noise, split permutation.
Dataset synth_multimodal(const SynthSpec& spec);

/// Columns of `features` at `indices`, in order.
FeatureMatrix select_columns(const FeatureMatrix& features, std::span<const Index> indices);

}  // namespace agsfh
