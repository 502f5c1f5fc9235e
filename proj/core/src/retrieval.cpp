#include "agsfh/retrieval.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "agsfh/error.hpp"
#include "parallel.hpp"

namespace agsfh {

std::string task_name(Task task) { return task == Task::kImageToText ? "i2t" : "t2i"; }

Task parse_task(std::string_view name) {
  if (name == "i2t" || name == "img2txt" || name == "I->T") return Task::kImageToText;
  if (name == "t2i" || name == "txt2img" || name == "T->I") return Task::kTextToImage;
  throw InvalidArgument("unknown retrieval task '" + std::string(name) + "' (expected i2t or t2i)");
}

Index query_modality(Task task) { return task == Task::kImageToText ? 0 : 1; }
Index database_modality(Task task) { return task == Task::kImageToText ? 1 : 0; }

SignMatrix encode(const Eigen::MatrixXd& queries, const HashModel& model, Index modality) {
  if (modality < 0 || modality >= model.modality_count())
    throw InvalidArgument("model has no modality " + std::to_string(modality));
  const auto m = static_cast<std::size_t>(modality);
  const auto& w = model.projections[m];
  if (queries.rows() != w.rows())
    throw InvalidArgument("modality " + std::to_string(modality) + " expects " + std::to_string(w.rows()) +
                          "-dimensional features, got " + std::to_string(queries.rows()));
  return sign_of(w.transpose() * (queries.colwise() - model.means[m]));
}

SignMatrix encode(const FeatureMatrix& queries, const HashModel& model) {
  return encode(queries.data, model, queries.modality_id);
}

CodeIndex::CodeIndex(PackedCodes codes, std::optional<Labels> labels)
    : codes_(std::move(codes)), labels_(std::move(labels)) {
  if (labels_ && labels_->size() != codes_.size())
    throw InvalidArgument("index has " + std::to_string(codes_.size()) + " codes but " +
                          std::to_string(labels_->size()) + " labels");
}

namespace {

std::vector<int> distances_to(std::span<const std::uint64_t> query, const PackedCodes& db) {
  std::vector<int> d(static_cast<std::size_t>(db.size()));
  for (Index i = 0; i < db.size(); ++i) d[static_cast<std::size_t>(i)] = hamming_distance(query, db.code(i));
  return d;
}

/// Stable counting sort on distances in [0, bits].
std::vector<Index> rank_by(const std::vector<int>& dist, Index bits) {
  std::vector<Index> start(static_cast<std::size_t>(bits) + 2, 0);
  for (int d : dist) ++start[static_cast<std::size_t>(d) + 1];
  for (std::size_t b = 1; b < start.size(); ++b) start[b] += start[b - 1];
  std::vector<Index> order(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i)
    order[static_cast<std::size_t>(start[static_cast<std::size_t>(dist[i])]++)] = static_cast<Index>(i);
  return order;
}

}  // namespace

std::vector<Index> hamming_rank(std::span<const std::uint64_t> query, const CodeIndex& index) {
  if (static_cast<Index>(query.size()) != index.codes().words_per_code())
    throw InvalidArgument("query code width does not match the index");
  return rank_by(distances_to(query, index.codes()), index.bits());
}

double average_precision(std::span<const char> relevant, Index total_relevant, Index depth,
                         ApNormalization normalization) {
  const Index limit = std::min<Index>(depth, static_cast<Index>(relevant.size()));
  double sum = 0.0;
  Index hits = 0;
  for (Index r = 0; r < limit; ++r) {
    if (relevant[static_cast<std::size_t>(r)]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  const Index denom = normalization == ApNormalization::kMinRelevantDepth ? std::min(total_relevant, depth) : hits;
  return denom > 0 ? sum / static_cast<double>(denom) : 0.0;
}

RetrievalReport evaluate(const PackedCodes& queries, const Labels& query_labels, const CodeIndex& database,
                         const EvalOptions& options) {
  if (!database.labels()) throw InvalidArgument("evaluation needs database labels");
  if (query_labels.size() != queries.size())
    throw InvalidArgument("query labels cover " + std::to_string(query_labels.size()) + " of " +
                          std::to_string(queries.size()) + " queries");
  if (queries.bits() != database.bits())
    throw InvalidArgument("query codes have " + std::to_string(queries.bits()) + " bits, database " +
                          std::to_string(database.bits()));
  if (options.map_depth < 1) throw InvalidArgument("MAP depth must be positive");

  const Index q = queries.size();
  const Index n = database.size();
  const Index bits = database.bits();
  const auto& db_labels = *database.labels();
  const std::size_t grid = options.topn.size();
  const std::size_t radii = static_cast<std::size_t>(bits) + 1;

  struct PerQuery {
    bool counted = false;
    double ap = 0.0;
    std::vector<double> topn;
    std::vector<double> precision;
    std::vector<double> recall;
  };
  std::vector<PerQuery> results(static_cast<std::size_t>(q));

  detail::parallel_for(q, options.threads, [&](Index begin, Index end) {
    std::vector<char> rel(static_cast<std::size_t>(n));
    for (Index qi = begin; qi < end; ++qi) {
      const std::vector<int> dist = distances_to(queries.code(qi), database.codes());
      Index total = 0;
      std::vector<Index> bucket_all(radii, 0);
      std::vector<Index> bucket_rel(radii, 0);
      for (Index i = 0; i < n; ++i) {
        const bool r = query_labels.relevant(qi, db_labels, i);
        total += r;
        const auto d = static_cast<std::size_t>(dist[static_cast<std::size_t>(i)]);
        ++bucket_all[d];
        bucket_rel[d] += r;
      }
      auto& out = results[static_cast<std::size_t>(qi)];
      if (total == 0) continue;
      out.counted = true;

      const std::vector<Index> order = rank_by(dist, bits);
      for (Index r = 0; r < n; ++r)
        rel[static_cast<std::size_t>(r)] = query_labels.relevant(qi, db_labels, order[static_cast<std::size_t>(r)]);
      out.ap = average_precision(rel, total, options.map_depth, options.normalization);

      out.topn.resize(grid);
      for (std::size_t g = 0; g < grid; ++g) {
        const Index depth = std::min(options.topn[g], n);
        Index hits = 0;
        for (Index r = 0; r < depth; ++r) hits += rel[static_cast<std::size_t>(r)];
        out.topn[g] = depth > 0 ? static_cast<double>(hits) / static_cast<double>(depth) : 0.0;
      }

      out.precision.resize(radii);
      out.recall.resize(radii);
      Index seen = 0;
      Index hits = 0;
      for (std::size_t d = 0; d < radii; ++d) {
        seen += bucket_all[d];
        hits += bucket_rel[d];
        out.precision[d] = seen > 0 ? static_cast<double>(hits) / static_cast<double>(seen) : 0.0;
        out.recall[d] = static_cast<double>(hits) / static_cast<double>(total);
      }
    }
  });

  RetrievalReport report;
  report.bits = bits;
  report.map_depth = options.map_depth;
  report.topn.resize(grid);
  for (std::size_t g = 0; g < grid; ++g) report.topn[g].n = options.topn[g];
  report.precision_recall.resize(radii);
  for (std::size_t d = 0; d < radii; ++d) report.precision_recall[d].radius = static_cast<int>(d);

  for (const auto& r : results) {
    if (!r.counted) {
      ++report.excluded_queries;
      continue;
    }
    ++report.queries;
    report.map += r.ap;
    for (std::size_t g = 0; g < grid; ++g) report.topn[g].precision += r.topn[g];
    for (std::size_t d = 0; d < radii; ++d) {
      report.precision_recall[d].precision += r.precision[d];
      report.precision_recall[d].recall += r.recall[d];
    }
  }
  if (report.queries > 0) {
    const double scale = 1.0 / static_cast<double>(report.queries);
    report.map *= scale;
    for (auto& t : report.topn) t.precision *= scale;
    for (auto& p : report.precision_recall) {
      p.precision *= scale;
      p.recall = std::min(1.0, p.recall * scale);
    }
  }
  return report;
}

PackedCodes database_codes(const HashModel& model, const Dataset& dataset, std::span<const Index> instances,
                           Index modality, bool use_stored) {
  if (modality < 0 || modality >= dataset.modality_count())
    throw InvalidArgument("dataset has no modality " + std::to_string(modality));
  std::unordered_map<Index, Index> stored;
  if (use_stored && model.codes.size() > 0)
    for (std::size_t c = 0; c < model.training_indices.size(); ++c)
      stored.emplace(model.training_indices[c], static_cast<Index>(c));

  const FeatureMatrix& x = dataset.modalities[static_cast<std::size_t>(modality)];
  SignMatrix codes(model.bits(), static_cast<Index>(instances.size()));
  std::vector<Index> pending_cols;
  std::vector<Index> pending_src;
  for (std::size_t j = 0; j < instances.size(); ++j) {
    if (auto it = stored.find(instances[j]); it != stored.end()) {
      codes.col(static_cast<Index>(j)) = model.codes.col(it->second);
    } else {
      pending_cols.push_back(static_cast<Index>(j));
      pending_src.push_back(instances[j]);
    }
  }
  if (!pending_src.empty()) {
    const SignMatrix fresh = encode(select_columns(x, pending_src).data, model, modality);
    for (std::size_t j = 0; j < pending_cols.size(); ++j)
      codes.col(pending_cols[j]) = fresh.col(static_cast<Index>(j));
  }
  return PackedCodes::pack(codes);
}

RetrievalReport evaluate_task(const HashModel& model, const Dataset& dataset, Task task,
                              const EvalOptions& options, bool use_stored) {
  if (!dataset.labels) throw InvalidArgument("evaluation needs labels for every instance");
  if (dataset.modality_count() != model.modality_count())
    throw InvalidArgument("model has " + std::to_string(model.modality_count()) + " modalities, dataset has " +
                          std::to_string(dataset.modality_count()));
  for (Index m = 0; m < model.modality_count(); ++m) {
    const Index want = model.projections[static_cast<std::size_t>(m)].rows();
    const Index got = dataset.modalities[static_cast<std::size_t>(m)].feature_dim();
    if (want != got)
      throw InvalidArgument("modality " + std::to_string(m) + ": model expects dimension " + std::to_string(want) +
                            ", dataset has " + std::to_string(got));
  }
  const Index qm = query_modality(task);
  const auto& query_ids = dataset.split.query;
  const SignMatrix query_codes =
      encode(select_columns(dataset.modalities[static_cast<std::size_t>(qm)], query_ids).data, model, qm);
  const std::vector<Index> db_ids = dataset.split.database(dataset.count());
  CodeIndex index(database_codes(model, dataset, db_ids, database_modality(task), use_stored),
                  dataset.labels->select(db_ids));
  RetrievalReport report = evaluate(PackedCodes::pack(query_codes), dataset.labels->select(query_ids), index, options);
  report.task = task_name(task);
  return report;
}

void write_report_json(std::ostream& out, std::span<const RetrievalReport> reports) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["task"] = r.task;
    j["bits"] = r.bits;
    j["map_depth"] = r.map_depth;
    j["map"] = r.map;
    j["queries"] = r.queries;
    j["excluded_queries"] = r.excluded_queries;
    j["topn"] = nlohmann::ordered_json::array();
    for (const auto& t : r.topn) j["topn"].push_back({{"n", t.n}, {"precision", t.precision}});
    j["precision_recall"] = nlohmann::ordered_json::array();
    for (const auto& p : r.precision_recall)
      j["precision_recall"].push_back({{"radius", p.radius}, {"precision", p.precision}, {"recall", p.recall}});
    doc.push_back(std::move(j));
  }
  out << doc.dump(2) << '\n';
}

std::vector<RetrievalReport> read_report_json(std::istream& in) {
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report JSON: ") + e.what());
  }
  std::vector<RetrievalReport> out;
  try {
    for (const auto& j : doc) {
      RetrievalReport r;
      r.task = j.at("task").get<std::string>();
      r.bits = j.at("bits").get<Index>();
      r.map_depth = j.at("map_depth").get<Index>();
      r.map = j.at("map").get<double>();
      r.queries = j.at("queries").get<Index>();
      r.excluded_queries = j.at("excluded_queries").get<Index>();
      for (const auto& t : j.at("topn")) r.topn.push_back({t.at("n").get<Index>(), t.at("precision").get<double>()});
      for (const auto& p : j.at("precision_recall"))
        r.precision_recall.push_back(
            {p.at("radius").get<int>(), p.at("precision").get<double>(), p.at("recall").get<double>()});
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("report JSON is missing fields: ") + e.what());
  }
  return out;
}

void write_report_csv(std::ostream& out, std::span<const RetrievalReport> reports) {
  const auto old = out.precision(17);
  out << "task,bits,metric,x,value\n";
  for (const auto& r : reports) {
    out << r.task << ',' << r.bits << ",map," << r.map_depth << ',' << r.map << '\n';
    for (const auto& t : r.topn) out << r.task << ',' << r.bits << ",topn_precision," << t.n << ',' << t.precision << '\n';
    for (const auto& p : r.precision_recall) {
      out << r.task << ',' << r.bits << ",pr_precision," << p.radius << ',' << p.precision << '\n';
      out << r.task << ',' << r.bits << ",pr_recall," << p.radius << ',' << p.recall << '\n';
    }
  }
  out.precision(old);
}

}  // namespace agsfh
