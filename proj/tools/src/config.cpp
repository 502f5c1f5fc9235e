#include "agsfh/cli/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace agsfh::cli {

namespace {

constexpr std::array<std::string_view, 25> kKeys{
    "features", "split",  "labels", "synth",     "out",           "verbosity",          "threads",
    "bits",     "anchors", "clusters", "knn",    "gamma1",        "gamma2",             "gamma3",
    "lambda",   "iters",  "ogm_iters", "ogm_tol", "tol",          "seed",               "center",
    "renormalize_fusion", "momentum", "degree_floor", "edge_threshold"};

std::string_view trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  if (s.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T result{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, result);
  if (ec != std::errc() || ptr != end || value.empty())
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  return result;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected true/false)");
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

std::span<const std::string_view> config_keys() { return kKeys; }

void set_config_value(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  auto& h = c.hyper;
  if (key == "features") {
    c.features.clear();
    for (auto part : split_on(value, ',')) c.features.emplace_back(std::string(part));
  } else if (key == "split") {
    c.split = std::string(value);
  } else if (key == "labels") {
    c.labels = std::string(value);
  } else if (key == "synth") {
    if (!value.empty()) parse_synth(value);
    c.synth = std::string(value);
  } else if (key == "out") {
    c.out = std::string(value);
  } else if (key == "verbosity") {
    c.verbosity = parse_number<int>(key, value);
  } else if (key == "threads") {
    c.threads = parse_number<int>(key, value);
    if (c.threads < 1) throw ConfigError("threads must be at least 1");
  } else if (key == "bits") {
    h.bits = parse_number<Index>(key, value);
  } else if (key == "anchors") {
    h.anchors = parse_number<Index>(key, value);
  } else if (key == "clusters") {
    h.clusters = parse_number<Index>(key, value);
  } else if (key == "knn") {
    h.neighbors = parse_number<Index>(key, value);
  } else if (key == "gamma1") {
    h.gamma1 = parse_number<double>(key, value);
  } else if (key == "gamma2") {
    h.gamma2 = parse_number<double>(key, value);
  } else if (key == "gamma3") {
    h.gamma3 = parse_number<double>(key, value);
  } else if (key == "lambda") {
    h.lambda = parse_number<double>(key, value);
  } else if (key == "iters") {
    h.max_iter = parse_number<int>(key, value);
  } else if (key == "ogm_iters") {
    h.ogm_iter = parse_number<int>(key, value);
  } else if (key == "ogm_tol") {
    h.ogm_tol = parse_number<double>(key, value);
  } else if (key == "tol") {
    h.tol = parse_number<double>(key, value);
  } else if (key == "seed") {
    h.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "center") {
    h.center = parse_bool(key, value);
  } else if (key == "renormalize_fusion") {
    h.renormalize_fusion = parse_bool(key, value);
  } else if (key == "momentum") {
    if (value == "printed") h.momentum = Momentum::kPrinted;
    else if (value == "classic") h.momentum = Momentum::kClassic;
    else throw ConfigError("invalid value '" + std::string(value) + "' for momentum (expected printed or classic)");
  } else if (key == "degree_floor") {
    h.degree_floor = parse_number<double>(key, value);
  } else if (key == "edge_threshold") {
    h.edge_threshold = parse_number<double>(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(view.substr(0, eq));
    try {
      set_config_value(config, key, view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const RunConfig& c) {
  const auto& h = c.hyper;
  std::ostringstream out;
  out << "features = ";
  for (std::size_t i = 0; i < c.features.size(); ++i) out << (i ? "," : "") << c.features[i].string();
  out << "\nsplit = " << c.split.string() << "\nlabels = " << c.labels.string() << "\nsynth = " << c.synth
      << "\nout = " << c.out.string() << "\nverbosity = " << c.verbosity << "\nthreads = " << c.threads
      << "\nbits = " << h.bits << "\nanchors = " << h.anchors << "\nclusters = " << h.clusters
      << "\nknn = " << h.neighbors << "\ngamma1 = " << format_double(h.gamma1)
      << "\ngamma2 = " << format_double(h.gamma2) << "\ngamma3 = " << format_double(h.gamma3)
      << "\nlambda = " << format_double(h.lambda) << "\niters = " << h.max_iter << "\nogm_iters = " << h.ogm_iter
      << "\nogm_tol = " << format_double(h.ogm_tol) << "\ntol = " << format_double(h.tol) << "\nseed = " << h.seed
      << "\ncenter = " << (h.center ? "true" : "false")
      << "\nrenormalize_fusion = " << (h.renormalize_fusion ? "true" : "false")
      << "\nmomentum = " << (h.momentum == Momentum::kPrinted ? "printed" : "classic")
      << "\ndegree_floor = " << format_double(h.degree_floor)
      << "\nedge_threshold = " << format_double(h.edge_threshold) << '\n';
  return out.str();
}

SynthSpec parse_synth(std::string_view text) {
  SynthSpec spec;
  for (auto item : split_on(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("synth spec item '" + std::string(item) + "' needs key=value");
    const auto key = trim(item.substr(0, eq));
    const auto value = trim(item.substr(eq + 1));
    if (key == "C" || key == "clusters") {
      spec.clusters = parse_number<int>(key, value);
    } else if (key == "N" || key == "count") {
      spec.count = parse_number<Index>(key, value);
    } else if (key == "dims") {
      spec.dims.clear();
      for (auto d : split_on(value, ':')) spec.dims.push_back(parse_number<Index>(key, d));
    } else if (key == "noise") {
      spec.noise = parse_number<double>(key, value);
    } else if (key == "seed") {
      spec.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "query") {
      spec.query_fraction = parse_number<double>(key, value);
    } else {
      throw ConfigError("unknown synth spec key '" + std::string(key) + "'");
    }
  }
  return spec;
}

Dataset load_dataset(const RunConfig& c) {
  if (!c.synth.empty()) return synth_multimodal(parse_synth(c.synth));
  if (c.features.size() < 2)
    throw ConfigError("need feature files for at least two modalities (or a synth spec)");
  Dataset data;
  for (std::size_t m = 0; m < c.features.size(); ++m)
    data.modalities.push_back(load_features(c.features[m], format_for(c.features[m]), static_cast<int>(m)));
  if (!c.labels.empty()) data.labels = load_labels(c.labels);
  if (!c.split.empty()) {
    data.split = load_split(c.split);
  } else {
    data.split.training.resize(static_cast<std::size_t>(data.count()));
    for (Index i = 0; i < data.count(); ++i) data.split.training[static_cast<std::size_t>(i)] = i;
  }
  data.validate();
  return data;
}

}  // namespace agsfh::cli
