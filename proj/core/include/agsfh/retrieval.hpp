#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "agsfh/codes.hpp"
#include "agsfh/dataset.hpp"
#include "agsfh/training.hpp"

namespace agsfh {

/// Retrieval direction. Modality 0 holds images and modality 1 texts.
enum class Task { kImageToText, kTextToImage };

std::string task_name(Task task);  // "i2t" / "t2i"
Task parse_task(std::string_view name);
Index query_modality(Task task);
Index database_modality(Task task);

/// h_m(x) = sgn(W_m^T (x - mean_m)) for every column of `queries`.
SignMatrix encode(const Eigen::MatrixXd& queries, const HashModel& model, Index modality);
SignMatrix encode(const FeatureMatrix& queries, const HashModel& model);

/// Packed database codes with optional relevance labels.
class CodeIndex {
 public:
  CodeIndex() = default;
  explicit CodeIndex(PackedCodes codes, std::optional<Labels> labels = std::nullopt);

  Index bits() const { return codes_.bits(); }
  Index size() const { return codes_.size(); }
  const PackedCodes& codes() const { return codes_; }
  const std::optional<Labels>& labels() const { return labels_; }

 private:
  PackedCodes codes_;
  std::optional<Labels> labels_;
};

/// Database indices ordered by Hamming distance to `query`, ties broken by
/// ascending index.
std::vector<Index> hamming_rank(std::span<const std::uint64_t> query, const CodeIndex& index);

enum class ApNormalization {
  kMinRelevantDepth,   ///< divide by min(#relevant in database, depth)
  kRetrievedRelevant,  ///< divide by #relevant within the top `depth`
};

/// Average precision over the first `depth` entries of a ranking.
/// `relevant` flags the ranking in order; `total_relevant` counts relevant
/// items in the whole database.
double average_precision(std::span<const char> relevant, Index total_relevant, Index depth,
                         ApNormalization normalization = ApNormalization::kMinRelevantDepth);

struct EvalOptions {
  Index map_depth = 50;
  std::vector<Index> topn{50, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
  ApNormalization normalization = ApNormalization::kMinRelevantDepth;
  int threads = 1;
};

struct TopNPoint {
  Index n = 0;
  double precision = 0.0;
  bool operator==(const TopNPoint&) const = default;
};

/// Mean precision and recall over queries when retrieving every item within
/// Hamming radius r; a query retrieving nothing contributes precision 0.
struct PrPoint {
  int radius = 0;
  double precision = 0.0;
  double recall = 0.0;
  bool operator==(const PrPoint&) const = default;
};

struct RetrievalReport {
  std::string task;
  Index bits = 0;
  Index map_depth = 50;
  double map = 0.0;
  Index queries = 0;           // queries averaged
  Index excluded_queries = 0;  // queries without any relevant database item
  std::vector<TopNPoint> topn;
  std::vector<PrPoint> precision_recall;

  bool operator==(const RetrievalReport&) const = default;
};

/// Scores every query against the database. Queries with no relevant item are
/// excluded from all averages and counted in `excluded_queries`.
RetrievalReport evaluate(const PackedCodes& queries, const Labels& query_labels, const CodeIndex& database,
                         const EvalOptions& options = {});

/// Database codes for the given instances: the stored training code when the
/// model carries one and `use_stored` is set, otherwise h_m(x) of `modality`.
PackedCodes database_codes(const HashModel& model, const Dataset& dataset, std::span<const Index> instances,
                           Index modality, bool use_stored = true);

/// Full cross-modal protocol for one direction: encode the query split with
/// the query modality, index everything else with the database modality.
RetrievalReport evaluate_task(const HashModel& model, const Dataset& dataset, Task task,
                              const EvalOptions& options = {}, bool use_stored = true);

/// JSON summary; the writer is deterministic so a read-write cycle
/// reproduces the same text.
void write_report_json(std::ostream& out, std::span<const RetrievalReport> reports);
std::vector<RetrievalReport> read_report_json(std::istream& in);

/// Columns: task,bits,metric,x,value. Metrics: map (x = depth),
/// topn_precision (x = N), pr_precision and pr_recall (x = radius).
void write_report_csv(std::ostream& out, std::span<const RetrievalReport> reports);

}  // namespace agsfh
