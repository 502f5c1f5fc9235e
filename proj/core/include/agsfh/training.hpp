#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "agsfh/codes.hpp"
#include "agsfh/dataset.hpp"
#include "agsfh/error.hpp"
#include "agsfh/graph.hpp"
#include "agsfh/random.hpp"
#include "agsfh/simplex_opt.hpp"
#include "agsfh/spectral.hpp"

namespace agsfh {

struct Hyperparams {
  Index bits = 16;        // K
  Index anchors = 900;    // P
  Index clusters = 60;    // C
  Index neighbors = 45;   // k
  double gamma1 = 0.01;   // graph approximation weight
  double gamma2 = 10.0;   // graph smoothness (ridge) weight
  double gamma3 = 0.01;   // code-graph coupling weight
  double lambda = 300.0;  // hash-function regression weight
  int max_iter = 50;
  int ogm_iter = 200;
  double ogm_tol = 1e-4;
  double tol = 1e-4;      // relative objective change that ends training
  std::uint64_t seed = 0;
  bool center = true;
  bool renormalize_fusion = false;
  Momentum momentum = Momentum::kPrinted;
  double degree_floor = kDegreeFloor;
  double edge_threshold = kEdgeThreshold;

  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

/// Learned hash functions h_m(x) = sgn(W_m^T (x - mean_m)).
struct HashModel {
  Hyperparams hyper;
  std::vector<Eigen::VectorXd> means;        // per modality, zero when centering is off
  std::vector<Eigen::MatrixXd> projections;  // W_m, d_m x K
  SignMatrix anchor_codes;                   // B_s, K x P
  SignMatrix codes;                          // B, K x N_train; may be empty
  std::vector<Index> training_indices;       // dataset index of each column of `codes`

  Index modality_count() const { return static_cast<Index>(projections.size()); }
  Index bits() const { return hyper.bits; }
  void validate() const;
  bool operator==(const HashModel&) const;
};

/// The five addends of the training objective, each with its sign applied.
struct ObjectiveTerms {
  double laplacian = 0.0;      // Tr(V^T L V)
  double approximation = 0.0;  // -gamma1 Tr(A^T S)
  double regularizer = 0.0;    // gamma2 ||S||_F^2
  double code_graph = 0.0;     // -gamma3 Tr(B S B_s^T)
  double regression = 0.0;     // lambda sum_m ||B - W_m^T X_m||_F^2

  double total() const { return laplacian + approximation + regularizer + code_graph + regression; }
};

struct TraceEntry {
  int iteration = 0;
  ObjectiveTerms terms;
  double objective = 0.0;
  double per_instance = 0.0;  // objective / N
  double normalized = 0.0;    // objective / first recorded objective
  ComponentCount components;
  double mean_ogm_iterations = 0.0;
  double seconds = 0.0;
};

struct TrainTrace {
  std::vector<TraceEntry> entries;
  bool converged = false;
};

void write_trace_csv(std::ostream& out, const TrainTrace& trace);

/// Thrown when the objective turns non-finite; carries the trace so far.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, TrainTrace trace)
      : NumericError(what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const { return trace_; }

 private:
  TrainTrace trace_;
};

ObjectiveTerms objective(const AnchorGraph& graph, const AnchorGraph& fused,
                         const SpectralState& spectral, const SignMatrix& codes,
                         const SignMatrix& anchor_codes, std::span<const Eigen::MatrixXd> projections,
                         std::span<const Eigen::MatrixXd> features, const Hyperparams& hyper);

/// B = sgn(gamma3 B_s S^T + 2 lambda sum_m W_m^T X_m).
SignMatrix update_codes(const AnchorGraph& graph, const SignMatrix& anchor_codes,
                        std::span<const Eigen::MatrixXd> projections,
                        std::span<const Eigen::MatrixXd> features, const Hyperparams& hyper);

/// B_s = sgn(B S).
SignMatrix update_anchor_codes(const SignMatrix& codes, const AnchorGraph& graph);

/// Ridge used by update_projection: 1e-6 * trace(X X^T) / d.
double projection_ridge(const Eigen::MatrixXd& features);

/// W = (X X^T + eps I)^{-1} X B^T.
Eigen::MatrixXd update_projection(const Eigen::MatrixXd& features, const SignMatrix& codes);

/// Each row holds ceil(n/2) entries +1 and floor(n/2) entries -1 in random order.
SignMatrix balanced_codes(Index bits, Index count, Rng& rng);

struct TrainOptions {
  int threads = 1;
  std::ostream* eigenvalue_log = nullptr;  // "iteration,ev0,ev1,..." per iteration
};

struct TrainResult {
  HashModel model;
  TrainTrace trace;
  std::vector<Index> anchor_indices;
  AnchorGraph fused;
  AnchorGraph graph;
  SpectralState spectral;
  ComponentCount components;
};

/// Alternating optimisation over S, degrees, V, B, B_s and W.
///
/// Construction performs the initialisation: anchor sampling, per-modality
/// anchor graphs, fusion, the initial embedding, unit degrees, random
/// projections and balanced random codes. Each step_* call solves one block
/// with the others fixed; run() loops over all six.
class Trainer {
 public:
  Trainer(const Dataset& dataset, const Hyperparams& hyper, const TrainOptions& options = {});

  void step_graph();
  void step_degrees();
  void step_embedding();
  void step_codes();
  void step_anchor_codes();
  void step_projections();

  /// One full outer iteration; returns the recorded trace entry.
  const TraceEntry& iterate();
  void run();

  ObjectiveTerms current_objective() const;

  const Hyperparams& hyper() const { return hyper_; }
  const AnchorGraph& graph() const { return graph_; }
  const AnchorGraph& fused() const { return fused_; }
  const std::vector<AnchorGraph>& modality_graphs() const { return modality_graphs_; }
  const SpectralState& spectral() const { return spectral_; }
  const SignMatrix& codes() const { return codes_; }
  const SignMatrix& anchor_codes() const { return anchor_codes_; }
  const std::vector<Eigen::MatrixXd>& projections() const { return projections_; }
  const std::vector<Eigen::MatrixXd>& features() const { return features_; }
  const TrainTrace& trace() const { return trace_; }
  double last_mean_ogm_iterations() const { return last_ogm_iterations_; }

  TrainResult finish() &&;

 private:
  Hyperparams hyper_;
  TrainOptions options_;
  std::vector<Index> training_indices_;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::MatrixXd> features_;  // centred training features, d_m x N
  std::vector<Index> anchor_indices_;
  std::vector<AnchorGraph> modality_graphs_;
  AnchorGraph fused_;
  AnchorGraph graph_;
  bool graph_learned_ = false;
  SpectralState spectral_;
  SignMatrix codes_;
  SignMatrix anchor_codes_;
  std::vector<Eigen::MatrixXd> projections_;
  TrainTrace trace_;
  double last_ogm_iterations_ = 0.0;
};

TrainResult train(const Dataset& dataset, const Hyperparams& hyper, const TrainOptions& options = {});

/// Model file: magic "AGSF", u32 version, hyper-parameters, per-modality
/// means and projections, B_s, and optionally B with its training indices.
/// All fields little-endian; see model_io.cpp for the field order.
void write_model(std::ostream& out, const HashModel& model, bool include_codes = true);
HashModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const HashModel& model, bool include_codes = true);
HashModel load_model(const std::filesystem::path& path);

}  // namespace agsfh
