#include "agsfh/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>

#include "agsfh/error.hpp"
#include "agsfh/random.hpp"
#include "binary_io.hpp"

namespace agsfh {
namespace {

constexpr std::string_view kFeatureMagic = "AGFM";
constexpr std::uint32_t kFeatureVersion = 1;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string cell_name(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row + 1) + ", column " + std::to_string(col + 1);
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

template <typename Fn>
auto with_path(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    const std::string prefix = path.string() + ": ";
    if (std::string_view(e.what()).starts_with(prefix)) throw;
    throw IoError(prefix + e.what());
  }
}

std::vector<Index> parse_index_line(const std::string& line, std::string_view what) {
  std::vector<Index> out;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    Index value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || value < 0)
      throw IoError("malformed " + std::string(what) + " index '" + token + "'");
    out.push_back(value);
  }
  return out;
}

void check_finite(const Eigen::MatrixXd& data) {
  for (Index j = 0; j < data.cols(); ++j)
    for (Index i = 0; i < data.rows(); ++i)
      if (!std::isfinite(data(i, j)))
        throw IoError("non-finite value at " +
                      cell_name(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
}

}  // namespace

Labels::Labels(std::vector<std::vector<int>> per_instance) : ids_(std::move(per_instance)) {
  for (auto& ids : ids_) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  }
}

Labels Labels::single(std::span<const int> ids) {
  std::vector<std::vector<int>> per;
  per.reserve(ids.size());
  for (int id : ids) per.push_back({id});
  return Labels(std::move(per));
}

bool Labels::relevant(Index a, const Labels& other, Index b) const {
  const auto& x = ids_[static_cast<std::size_t>(a)];
  const auto& y = other.ids_[static_cast<std::size_t>(b)];
  auto i = x.begin();
  auto j = y.begin();
  while (i != x.end() && j != y.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

Labels Labels::select(std::span<const Index> indices) const {
  Labels out;
  out.ids_.reserve(indices.size());
  for (Index i : indices) out.ids_.push_back(ids_.at(static_cast<std::size_t>(i)));
  return out;
}

std::vector<Index> Split::database(Index count) const {
  std::vector<bool> is_query(static_cast<std::size_t>(count), false);
  for (Index q : query) is_query.at(static_cast<std::size_t>(q)) = true;
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(count) - query.size());
  for (Index i = 0; i < count; ++i)
    if (!is_query[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

void Dataset::validate() const {
  if (modalities.size() < 2)
    throw InvalidArgument("a dataset needs at least two modalities, got " +
                          std::to_string(modalities.size()));
  const Index n = count();
  for (const auto& m : modalities) {
    if (m.count() != n)
      throw InvalidArgument("modality " + std::to_string(m.modality_id) + " has " +
                            std::to_string(m.count()) + " instances, expected " +
                            std::to_string(n));
    if (!m.data.allFinite())
      throw InvalidArgument("modality " + std::to_string(m.modality_id) +
                            " contains non-finite values");
  }
  if (labels && labels->size() != n)
    throw InvalidArgument("labels cover " + std::to_string(labels->size()) +
                          " instances, expected " + std::to_string(n));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  auto mark = [&](const std::vector<Index>& ids, char tag, std::string_view name) {
    for (Index i : ids) {
      if (i < 0 || i >= n)
        throw InvalidArgument(std::string(name) + " index " + std::to_string(i) +
                              " out of range [0, " + std::to_string(n) + ")");
      auto& s = seen[static_cast<std::size_t>(i)];
      if (s == tag)
        throw InvalidArgument(std::string(name) + " index " + std::to_string(i) + " repeated");
      if (s != 0)
        throw InvalidArgument("index " + std::to_string(i) +
                              " appears in both training and query splits");
      s = tag;
    }
  };
  mark(split.training, 1, "training");
  mark(split.query, 2, "query");
}

FeatureFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FeatureFormat::kCsv : FeatureFormat::kBinary;
}

FeatureMatrix read_features_csv(std::istream& in, int modality_id) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    const std::size_t row = line_no++;
    if (trim(line).empty()) continue;
    std::vector<double> values;
    std::string_view rest(line);
    std::size_t col = 0;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view token = trim(rest.substr(0, comma));
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size())
        throw IoError("malformed value '" + std::string(token) + "' at " + cell_name(row, col));
      if (!std::isfinite(value))
        throw IoError("non-finite value '" + std::string(token) + "' at " + cell_name(row, col));
      values.push_back(value);
      ++col;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows.empty()) {
      width = values.size();
    } else if (values.size() != width) {
      throw IoError("row " + std::to_string(row + 1) + " has " + std::to_string(values.size()) +
                    " values, expected " + std::to_string(width));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw IoError("empty CSV feature file");

  FeatureMatrix out;
  out.modality_id = modality_id;
  out.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      out.data(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return out;
}

FeatureMatrix read_features_binary(std::istream& in, int modality_id) {
  detail::expect_magic(in, kFeatureMagic);
  const auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kFeatureVersion)
    throw IoError("unsupported feature file version " + std::to_string(version));
  const auto d = detail::read_le<std::uint32_t>(in, "feature dimension");
  const auto n = detail::read_le<std::uint64_t>(in, "instance count");
  FeatureMatrix out;
  out.modality_id = modality_id;
  out.data.resize(static_cast<Index>(d), static_cast<Index>(n));
  const std::size_t total = static_cast<std::size_t>(d) * static_cast<std::size_t>(n);
  try {
    detail::read_doubles(in, out.data.data(), total, "feature values");
  } catch (const IoError&) {
    throw IoError("dimension mismatch: header declares " + std::to_string(d) + " x " +
                  std::to_string(n) + " values but the file is shorter");
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw IoError("dimension mismatch: trailing bytes after " + std::to_string(d) + " x " +
                  std::to_string(n) + " values");
  check_finite(out.data);
  return out;
}

void write_features_csv(std::ostream& out, const FeatureMatrix& features) {
  const auto& x = features.data;
  char buf[32];
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x(i, j));
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

void write_features_binary(std::ostream& out, const FeatureMatrix& features) {
  detail::write_magic(out, kFeatureMagic);
  detail::write_le<std::uint32_t>(out, kFeatureVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(features.feature_dim()));
  detail::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(features.count()));
  detail::write_doubles(out, features.data.data(), static_cast<std::size_t>(features.data.size()));
}

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format,
                            int modality_id) {
  return with_path(path, [&] {
    if (format == FeatureFormat::kCsv) {
      auto in = open_in(path);
      return read_features_csv(in, modality_id);
    }
    auto in = open_in(path, std::ios::binary);
    return read_features_binary(in, modality_id);
  });
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& features,
                   FeatureFormat format) {
  if (format == FeatureFormat::kCsv) {
    auto out = open_out(path);
    write_features_csv(out, features);
  } else {
    auto out = open_out(path, std::ios::binary);
    write_features_binary(out, features);
  }
}

Split read_split(std::istream& in) {
  std::string training;
  std::string query;
  if (!std::getline(in, training)) throw IoError("split file is empty");
  std::getline(in, query);
  return Split{parse_index_line(training, "training"), parse_index_line(query, "query")};
}

void write_split(std::ostream& out, const Split& split) {
  auto line = [&](const std::vector<Index>& ids) {
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << ids[i];
    out << '\n';
  };
  line(split.training);
  line(split.query);
}

Split load_split(const std::filesystem::path& path) {
  return with_path(path, [&] {
    auto in = open_in(path);
    return read_split(in);
  });
}

void save_split(const std::filesystem::path& path, const Split& split) {
  auto out = open_out(path);
  write_split(out, split);
}

Labels load_labels(const std::filesystem::path& path) {
  return with_path(path, [&] {
    auto in = open_in(path);
    std::vector<std::vector<int>> per;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::vector<int> ids;
      std::istringstream tokens(line);
      std::string token;
      while (tokens >> token) {
        int value = 0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size())
          throw IoError("malformed label '" + token + "' on line " + std::to_string(line_no));
        ids.push_back(value);
      }
      per.push_back(std::move(ids));
    }
    return Labels(std::move(per));
  });
}

void save_labels(const std::filesystem::path& path, const Labels& labels) {
  auto out = open_out(path);
  for (Index i = 0; i < labels.size(); ++i) {
    const auto ids = labels.of(i);
    for (std::size_t k = 0; k < ids.size(); ++k) out << (k ? " " : "") << ids[k];
    out << '\n';
  }
}

AnchorSet sample_anchors(const Dataset& dataset, Index count, std::uint64_t seed) {
  const auto& pool = dataset.split.training;
  if (count < 1 || count > static_cast<Index>(pool.size()))
    throw InvalidArgument("cannot sample " + std::to_string(count) + " anchors from a training split of " +
                          std::to_string(pool.size()));
  std::vector<Index> shuffled = pool;
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(shuffled.size() - i));
    std::swap(shuffled[i], shuffled[j]);
  }
  AnchorSet out;
  out.indices.assign(shuffled.begin(), shuffled.begin() + count);
  for (const auto& m : dataset.modalities) {
    Eigen::MatrixXd t(m.feature_dim(), count);
    for (Index p = 0; p < count; ++p) t.col(p) = m.data.col(out.indices[static_cast<std::size_t>(p)]);
    out.anchors.push_back(std::move(t));
  }
  return out;
}

Dataset synth_multimodal(const SynthSpec& spec) {
  if (spec.clusters < 2) throw InvalidArgument("synthetic data needs at least 2 clusters");
  if (spec.count < spec.clusters)
    throw InvalidArgument("synthetic data needs at least one instance per cluster");
  if (spec.dims.size() < 2) throw InvalidArgument("synthetic data needs at least 2 modalities");
  for (Index d : spec.dims)
    if (d < 1) throw InvalidArgument("feature dimensions must be positive");
  if (!(spec.noise >= 0.0)) throw InvalidArgument("noise must be non-negative");
  if (!(spec.query_fraction >= 0.0 && spec.query_fraction < 1.0))
    throw InvalidArgument("query fraction must lie in [0, 1)");

  const Index c = spec.clusters;
  const Index n = spec.count;
  Rng rng(spec.seed);

  std::vector<Eigen::MatrixXd> maps;
  for (Index d : spec.dims) {
    Eigen::MatrixXd a(d, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < d; ++i) a(i, j) = rng.normal();
    maps.push_back(std::move(a));
  }

  Eigen::MatrixXd latent = Eigen::MatrixXd::Zero(c, n);
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto label = static_cast<int>(i % c);
    ids[static_cast<std::size_t>(i)] = label;
    for (Index r = 0; r < c; ++r) latent(r, i) = (r == label ? 1.0 : 0.0) + spec.noise * rng.normal();
  }

  Dataset out;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    FeatureMatrix fm;
    fm.modality_id = static_cast<int>(m);
    fm.data = maps[m] * latent;
    for (Index i = 0; i < n; ++i)
      for (Index r = 0; r < fm.data.rows(); ++r) fm.data(r, i) += spec.noise * rng.normal();
    out.modalities.push_back(std::move(fm));
  }
  out.labels = Labels::single(ids);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(std::span<Index>(order));
  const auto queries = static_cast<std::size_t>(std::floor(spec.query_fraction * static_cast<double>(n)));
  out.split.query.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(queries));
  out.split.training.assign(order.begin() + static_cast<std::ptrdiff_t>(queries), order.end());
  std::sort(out.split.query.begin(), out.split.query.end());
  std::sort(out.split.training.begin(), out.split.training.end());
  return out;
}

FeatureMatrix select_columns(const FeatureMatrix& features, std::span<const Index> indices) {
  FeatureMatrix out;
  out.modality_id = features.modality_id;
  out.data.resize(features.feature_dim(), static_cast<Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const Index src = indices[j];
    if (src < 0 || src >= features.count())
      throw InvalidArgument("column index " + std::to_string(src) + " out of range");
    out.data.col(static_cast<Index>(j)) = features.data.col(src);
  }
  return out;
}

}  // namespace agsfh
