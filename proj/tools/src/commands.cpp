#include "agsfh/cli/commands.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "agsfh/cli/config.hpp"
#include "agsfh/retrieval.hpp"
#include "agsfh/training.hpp"

namespace agsfh::cli {

namespace fs = std::filesystem;

namespace {

/// Reference MAP@50 at 16/32/64/128 bits, for side-by-side
/// printing only.
struct ReferenceRow {
  std::array<double, 4> i2t;
  std::array<double, 4> t2i;
};

const std::map<std::string, ReferenceRow>& reference_table() {
  static const std::map<std::string, ReferenceRow> table{
      {"wiki", {{0.2548, 0.2681, 0.2640, 0.2680}, {0.5782, 0.6005, 0.6175, 0.6214}}},
      {"mirflickr25k", {{0.6509, 0.6650, 0.6777, 0.6828}, {0.6565, 0.6862, 0.7209, 0.7505}}},
      {"nuswide", {{0.4856, 0.5189, 0.5401, 0.5433}, {0.5152, 0.5834, 0.6144, 0.6362}}},
  };
  return table;
}

constexpr std::array<Index, 4> kReferenceBits{16, 32, 64, 128};

/// CLI flags that map onto config keys, applied in command-line order on
/// top of the optional --config file.
struct ConfigFlags {
  std::string path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void attach(CLI::App* cmd, bool with_hyper) {
    cmd->add_option("--config", path, "key = value config file; flags override it")->type_name("FILE");
    value(cmd, "--synth", "synth", "synthetic data spec, e.g. C=4,N=2000,dims=16:24,noise=0.1", "SPEC");
    value(cmd, "--features", "features", "comma-separated feature files, one per modality (.csv or binary)", "FILES");
    value(cmd, "--split", "split", "split file: training indices line, query indices line", "FILE");
    value(cmd, "--labels", "labels", "label file: one line of category ids per instance", "FILE");
    value(cmd, "--out", "out", "output directory", "DIR");
    value(cmd, "--threads", "threads", "worker thread cap", "INT");
    cmd->add_flag_callback("-v,--verbose", [this] { overrides.emplace_back("verbosity", "1"); }, "verbose output");
    if (!with_hyper) return;
    value(cmd, "--bits", "bits", "code length K", "INT");
    value(cmd, "--anchors", "anchors", "number of anchors P", "INT");
    value(cmd, "--clusters", "clusters", "number of clusters C", "INT");
    value(cmd, "--knn", "knn", "anchor neighbours per instance k", "INT");
    value(cmd, "--gamma1", "gamma1", "graph approximation weight", "REAL");
    value(cmd, "--gamma2", "gamma2", "graph ridge weight", "REAL");
    value(cmd, "--gamma3", "gamma3", "code-graph coupling weight", "REAL");
    value(cmd, "--lambda", "lambda", "hash-function regression weight", "REAL");
    value(cmd, "--iters", "iters", "outer iteration cap", "INT");
    value(cmd, "--ogm-iters", "ogm_iters", "per-column solver iteration cap", "INT");
    value(cmd, "--ogm-tol", "ogm_tol", "per-column solver tolerance", "REAL");
    value(cmd, "--tol", "tol", "relative objective change that stops training", "REAL");
    value(cmd, "--seed", "seed", "random seed", "INT");
    cmd->add_flag_callback("--renormalize-fusion", [this] { overrides.emplace_back("renormalize_fusion", "true"); },
                           "renormalise fused graph rows");
    cmd->add_flag_callback("--classic-momentum", [this] { overrides.emplace_back("momentum", "classic"); },
                           "use the classic momentum sequence");
    cmd->add_flag_callback("--no-center", [this] { overrides.emplace_back("center", "false"); },
                           "do not centre features");
  }

  RunConfig resolve() const {
    RunConfig config = path.empty() ? RunConfig{} : load_config(path);
    for (const auto& [key, v] : overrides) set_config_value(config, key, v);
    return config;
  }

 private:
  void value(CLI::App* cmd, const std::string& flag, std::string key, const std::string& help,
             const std::string& type) {
    cmd->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, help)
        ->type_name(type);
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::vector<Index> parse_index_list(const std::string& text, const char* what) {
  std::vector<Index> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      values.push_back(static_cast<Index>(v));
    } catch (const std::logic_error&) {
      throw ConfigError(std::string("invalid ") + what + " entry '" + item + "'");
    }
  }
  if (values.empty()) throw ConfigError(std::string("empty ") + what + " list");
  return values;
}

void print_summary(std::ostream& out, std::span<const RetrievalReport> reports) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::fixed << std::setprecision(6);
  for (const auto& r : reports) {
    out << r.task << " bits=" << r.bits << " map@" << r.map_depth << '=' << r.map << " queries=" << r.queries
        << " excluded=" << r.excluded_queries << '\n';
    out << "  topn";
    for (const auto& t : r.topn) out << ' ' << t.n << ':' << t.precision;
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

void write_reports(const fs::path& dir, std::span<const RetrievalReport> reports) {
  auto json = open_out(dir / "report.json");
  write_report_json(json, reports);
  auto csv = open_out(dir / "report.csv");
  write_report_csv(csv, reports);
}

std::vector<Task> tasks_for(const std::string& name) {
  if (name == "both") return {Task::kImageToText, Task::kTextToImage};
  try {
    return {parse_task(name)};
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

TrainResult train_and_save(const RunConfig& config, const Dataset& data, const fs::path& model_path,
                           const fs::path& trace_path, std::ostream& out) {
  std::ofstream eigen_log;
  TrainOptions options;
  options.threads = config.threads;
  if (config.verbosity > 0) {
    eigen_log = open_out(config.out / "eigenvalues.csv");
    options.eigenvalue_log = &eigen_log;
  }
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  try {
    result = train(data, config.hyper, options);
  } catch (const TrainingAborted& e) {
    auto trace = open_out(trace_path);
    write_trace_csv(trace, e.trace());
    throw;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_model(model_path, result.model);
  auto trace = open_out(trace_path);
  write_trace_csv(trace, result.trace);
  if (config.verbosity > 0) {
    for (const auto& e : result.trace.entries)
      out << "iter " << e.iteration << " objective=" << e.objective << " normalized=" << e.normalized
          << " components=" << e.components.groups << '\n';
  }
  out << "trained " << config.hyper.bits << "-bit model in " << std::setprecision(3) << seconds << " s, "
      << result.trace.entries.size() << " iterations" << (result.trace.converged ? " (converged)" : "")
      << ", components=" << result.components.groups << std::setprecision(6) << '\n';
  return result;
}

int cmd_synth(const std::string& spec_text, const fs::path& dir, const std::string& format, std::ostream& out) {
  const Dataset data = synth_multimodal(parse_synth(spec_text));
  if (format != "csv" && format != "bin") throw ConfigError("format must be csv or bin");
  fs::create_directories(dir);
  std::vector<std::string> names;
  for (const auto& m : data.modalities) {
    const fs::path path = dir / ("modality_" + std::to_string(m.modality_id) + (format == "csv" ? ".csv" : ".agfm"));
    save_features(path, m, format == "csv" ? FeatureFormat::kCsv : FeatureFormat::kBinary);
    names.push_back(path.string());
  }
  save_split(dir / "split.txt", data.split);
  save_labels(dir / "labels.txt", *data.labels);
  out << "wrote " << data.count() << " instances:";
  for (const auto& n : names) out << ' ' << n;
  out << ' ' << (dir / "split.txt").string() << ' ' << (dir / "labels.txt").string() << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  const Dataset data = load_dataset(config);
  fs::create_directories(config.out);
  {
    auto echo = open_out(config.out / "config.txt");
    echo << format_config(config);
  }
  train_and_save(config, data, config.out / "model.agsf", config.out / "trace.csv", out);
  return kExitOk;
}

struct EvaluateArgs {
  std::string model;
  std::string task = "both";
  Index map_depth = 50;
  std::string normalization = "min";
  std::string topn;
  std::string sweep;
  std::string reference;
  bool recompute_database = false;
};

EvalOptions eval_options(const EvaluateArgs& args, int threads) {
  EvalOptions options;
  options.map_depth = args.map_depth;
  options.threads = threads;
  if (args.normalization == "min") options.normalization = ApNormalization::kMinRelevantDepth;
  else if (args.normalization == "retrieved") options.normalization = ApNormalization::kRetrievedRelevant;
  else throw ConfigError("--ap-norm must be min or retrieved");
  if (!args.topn.empty()) options.topn = parse_index_list(args.topn, "topn");
  return options;
}

void write_grid(std::ostream& out, std::span<const RetrievalReport> reports, std::span<const Index> bits,
                std::span<const Task> tasks) {
  out << "task";
  for (Index b : bits) out << ',' << b << " bits";
  out << '\n';
  const auto precision = out.precision(4);
  const auto flags = out.flags();
  out << std::fixed;
  for (Task t : tasks) {
    out << (t == Task::kImageToText ? "I->T" : "T->I");
    for (Index b : bits)
      for (const auto& r : reports)
        if (r.task == task_name(t) && r.bits == b) out << ',' << r.map;
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

void print_reference(std::ostream& out, const std::string& name, std::span<const RetrievalReport> reports,
                     std::span<const Task> tasks) {
  const auto& table = reference_table();
  const auto it = table.find(name);
  if (it == table.end()) {
    std::string known;
    for (const auto& [k, v] : table) known += (known.empty() ? "" : ", ") + k;
    throw ConfigError("unknown reference '" + name + "' (known: " + known + ")");
  }
  const auto flags = out.flags();
  const auto precision = out.precision(4);
  out << std::fixed << "reference comparison for " << name << " (reference MAP@50; reported, not asserted)\n";
  for (Task t : tasks) {
    const auto& row = t == Task::kImageToText ? it->second.i2t : it->second.t2i;
    for (std::size_t i = 0; i < kReferenceBits.size(); ++i) {
      for (const auto& r : reports) {
        if (r.task != task_name(t) || r.bits != kReferenceBits[i]) continue;
        out << "  " << (t == Task::kImageToText ? "I->T" : "T->I") << ' ' << r.bits << " bits: measured " << r.map
            << " reference " << row[i] << " delta " << std::showpos << r.map - row[i] << std::noshowpos << '\n';
      }
    }
  }
  out.flags(flags);
  out.precision(precision);
}

int cmd_evaluate(const RunConfig& config, const EvaluateArgs& args, std::ostream& out) {
  const std::vector<Task> tasks = tasks_for(args.task);
  const EvalOptions options = eval_options(args, config.threads);
  if (args.model.empty() == args.sweep.empty())
    throw ConfigError("evaluate needs exactly one of --model or --sweep");
  const Dataset data = load_dataset(config);
  fs::create_directories(config.out);

  std::vector<RetrievalReport> reports;
  if (!args.model.empty()) {
    const HashModel model = load_model(args.model);
    for (Task t : tasks) reports.push_back(evaluate_task(model, data, t, options, !args.recompute_database));
    write_reports(config.out, reports);
    print_summary(out, reports);
  } else {
    const std::vector<Index> bits = parse_index_list(args.sweep, "sweep");
    for (Index b : bits) {
      RunConfig run = config;
      run.hyper.bits = b;
      const std::string stem = std::to_string(b) + "bits";
      const TrainResult trained =
          train_and_save(run, data, config.out / ("model_" + stem + ".agsf"), config.out / ("trace_" + stem + ".csv"), out);
      for (Task t : tasks) reports.push_back(evaluate_task(trained.model, data, t, options, !args.recompute_database));
    }
    write_reports(config.out, reports);
    {
      auto grid = open_out(config.out / "grid.csv");
      write_grid(grid, reports, bits, tasks);
    }
    print_summary(out, reports);
    write_grid(out, reports, bits, tasks);
  }
  if (!args.reference.empty()) print_reference(out, args.reference, reports, tasks);
  return kExitOk;
}

int cmd_show(const fs::path& path, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report '" + path.string() + "'");
  const std::vector<RetrievalReport> reports = read_report_json(in);
  print_summary(out, reports);
  return kExitOk;
}

int cmd_encode(const fs::path& model_path, const fs::path& features, int modality, bool stored,
               const fs::path& out_path, std::ostream& out) {
  const HashModel model = load_model(model_path);
  PackedCodes packed;
  if (stored) {
    if (model.codes.cols() == 0) throw ConfigError("model '" + model_path.string() + "' stores no training codes");
    packed = PackedCodes::pack(model.codes);
  } else {
    if (features.empty()) throw ConfigError("encode needs --features unless --stored-b is given");
    const FeatureMatrix x = load_features(features, format_for(features), modality);
    packed = PackedCodes::pack(encode(x, model));
  }
  save_codes(out_path, packed);
  out << "wrote " << packed.size() << " codes of " << packed.bits() << " bits to " << out_path.string() << '\n';
  return kExitOk;
}

int cmd_decode(const fs::path& codes_path, const fs::path& out_path, std::ostream& out) {
  const SignMatrix codes = load_codes(codes_path).unpack();
  std::ofstream file;
  std::ostream* sink = &out;
  if (!out_path.empty()) {
    file = open_out(out_path);
    sink = &file;
  }
  for (Index k = 0; k < codes.rows(); ++k) {
    for (Index i = 0; i < codes.cols(); ++i) *sink << (i ? "," : "") << static_cast<int>(codes(k, i));
    *sink << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-modal hashing with learned anchor graphs", "agsfh"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "agsfh 0.1.0");

  auto* synth = app.add_subcommand("synth", "write a synthetic multi-modal dataset");
  std::string synth_spec = "C=4,N=2000,dims=16:24,noise=0.1";
  std::string synth_out = ".";
  std::string synth_format = "csv";
  synth->add_option("--spec", synth_spec, "C=..,N=..,dims=d0:d1,noise=..,seed=..,query=..")->capture_default_str();
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();
  synth->add_option("--format", synth_format, "csv or bin")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "train a model; writes model.agsf, trace.csv and config.txt");
  ConfigFlags train_flags;
  train_flags.attach(train_cmd, true);

  auto* eval_cmd = app.add_subcommand(
      "evaluate",
      "evaluate a model or sweep code lengths; writes report.json and report.csv "
      "(columns task,bits,metric,x,value; metrics map, topn_precision, pr_precision, pr_recall), "
      "plus grid.csv for sweeps");
  ConfigFlags eval_flags;
  eval_flags.attach(eval_cmd, true);
  EvaluateArgs eval_args;
  eval_cmd->add_option("--model", eval_args.model, "model file");
  eval_cmd->add_option("--task", eval_args.task, "i2t, t2i or both")->capture_default_str();
  eval_cmd->add_option("--map-depth", eval_args.map_depth, "ranking depth for MAP")->capture_default_str();
  eval_cmd->add_option("--ap-norm", eval_args.normalization,
                       "AP denominator: min (min(#relevant, depth)) or retrieved (#relevant in top depth)")
      ->capture_default_str();
  eval_cmd->add_option("--topn", eval_args.topn, "comma-separated topN grid (default 50,100,200,...,1000)");
  eval_cmd->add_option("--sweep", eval_args.sweep, "retrain and evaluate at each code length, e.g. 16,32,64,128");
  eval_cmd->add_option("--reference", eval_args.reference,
                       "print reference MAP@50 values next to the sweep: wiki, mirflickr25k or nuswide");
  eval_cmd->add_flag("--recompute-db", eval_args.recompute_database,
                     "encode database items with the hash functions instead of using stored training codes");

  auto* show = app.add_subcommand("show", "print the summary of a report.json");
  std::string show_path;
  show->add_option("report", show_path, "report.json")->required();

  auto* encode_cmd = app.add_subcommand("encode", "encode features into a packed code file");
  std::string enc_model, enc_features, enc_out = "codes.agsc";
  int enc_modality = 0;
  bool enc_stored = false;
  encode_cmd->add_option("--model", enc_model, "model file")->required();
  encode_cmd->add_option("--features", enc_features, "feature file (.csv or binary)");
  encode_cmd->add_option("--modality", enc_modality, "modality of the features (0 image, 1 text)")
      ->capture_default_str();
  encode_cmd->add_option("--out", enc_out, "output code file")->capture_default_str();
  encode_cmd->add_flag("--stored-b", enc_stored, "write the model's stored training codes");

  auto* decode_cmd = app.add_subcommand("decode", "print a code file as a K x Q matrix of +1/-1");
  std::string dec_codes, dec_out;
  decode_cmd->add_option("codes", dec_codes, "code file")->required();
  decode_cmd->add_option("--out", dec_out, "write CSV here instead of standard output");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  } catch (const Error& e) {
    err << "agsfh: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_spec, synth_out, synth_format, out);
    if (train_cmd->parsed()) return cmd_train(train_flags.resolve(), out);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_flags.resolve(), eval_args, out);
    if (show->parsed()) return cmd_show(show_path, out);
    if (encode_cmd->parsed()) return cmd_encode(enc_model, enc_features, enc_modality, enc_stored, enc_out, out);
    if (decode_cmd->parsed()) return cmd_decode(dec_codes, dec_out, out);
  } catch (const NumericError& e) {
    err << "agsfh: numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "agsfh: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "agsfh: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace agsfh::cli
