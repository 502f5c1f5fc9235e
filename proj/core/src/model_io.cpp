// Model file layout (all little-endian):
//
//   char[4]  "AGSF"
//   u32      version (1)
//   u32      bits, anchors, clusters, neighbours
//   f64      gamma1, gamma2, gamma3, lambda
//   u32      max_iter, ogm_iter
//   f64      ogm_tol, tol
//   u64      seed
//   u8       center, renormalize_fusion, momentum (0 printed, 1 classic)
//   f64      degree_floor, edge_threshold
//   u32      M
//   M times: u32 d, f64[d] mean, f64[d*K] projection (column-major)
//   u64      P, then i8[K*P] anchor codes (column-major)
//   u8       has_codes; if 1: u64 N, u64[N] training indices, i8[K*N] codes

#include <fstream>
#include <string>

#include "agsfh/training.hpp"
#include "binary_io.hpp"

namespace agsfh {
namespace {

constexpr std::string_view kModelMagic = "AGSF";
constexpr std::uint32_t kModelVersion = 1;

void write_signs(std::ostream& out, const SignMatrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size()));
}

SignMatrix read_signs(std::istream& in, Index rows, Index cols, std::string_view what) {
  SignMatrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size()));
  if (!in) throw IoError("truncated input while reading " + std::string(what));
  if (!is_sign_matrix(m)) throw IoError(std::string(what) + " contain values other than -1/+1");
  return m;
}

}  // namespace

void write_model(std::ostream& out, const HashModel& model, bool include_codes) {
  using detail::write_le;
  const auto& h = model.hyper;
  detail::write_magic(out, kModelMagic);
  write_le<std::uint32_t>(out, kModelVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.bits));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.anchors));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.clusters));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.neighbors));
  write_le(out, h.gamma1);
  write_le(out, h.gamma2);
  write_le(out, h.gamma3);
  write_le(out, h.lambda);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.max_iter));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.ogm_iter));
  write_le(out, h.ogm_tol);
  write_le(out, h.tol);
  write_le<std::uint64_t>(out, h.seed);
  write_le<std::uint8_t>(out, h.center ? 1 : 0);
  write_le<std::uint8_t>(out, h.renormalize_fusion ? 1 : 0);
  write_le<std::uint8_t>(out, h.momentum == Momentum::kClassic ? 1 : 0);
  write_le(out, h.degree_floor);
  write_le(out, h.edge_threshold);

  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.projections.size()));
  for (std::size_t m = 0; m < model.projections.size(); ++m) {
    const auto& mean = model.means[m];
    const auto& w = model.projections[m];
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.rows()));
    detail::write_doubles(out, mean.data(), static_cast<std::size_t>(mean.size()));
    detail::write_doubles(out, w.data(), static_cast<std::size_t>(w.size()));
  }
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(model.anchor_codes.cols()));
  write_signs(out, model.anchor_codes);

  const bool codes = include_codes && model.codes.size() > 0;
  write_le<std::uint8_t>(out, codes ? 1 : 0);
  if (codes) {
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(model.codes.cols()));
    for (Index i : model.training_indices) write_le<std::uint64_t>(out, static_cast<std::uint64_t>(i));
    write_signs(out, model.codes);
  }
}

HashModel read_model(std::istream& in) {
  using detail::read_le;
  detail::expect_magic(in, kModelMagic);
  const auto version = read_le<std::uint32_t>(in, "model version");
  if (version != kModelVersion) throw IoError("unsupported model version " + std::to_string(version));

  HashModel model;
  auto& h = model.hyper;
  h.bits = read_le<std::uint32_t>(in, "bits");
  h.anchors = read_le<std::uint32_t>(in, "anchors");
  h.clusters = read_le<std::uint32_t>(in, "clusters");
  h.neighbors = read_le<std::uint32_t>(in, "neighbours");
  h.gamma1 = read_le<double>(in, "gamma1");
  h.gamma2 = read_le<double>(in, "gamma2");
  h.gamma3 = read_le<double>(in, "gamma3");
  h.lambda = read_le<double>(in, "lambda");
  h.max_iter = static_cast<int>(read_le<std::uint32_t>(in, "max_iter"));
  h.ogm_iter = static_cast<int>(read_le<std::uint32_t>(in, "ogm_iter"));
  h.ogm_tol = read_le<double>(in, "ogm_tol");
  h.tol = read_le<double>(in, "tol");
  h.seed = read_le<std::uint64_t>(in, "seed");
  h.center = read_le<std::uint8_t>(in, "center flag") != 0;
  h.renormalize_fusion = read_le<std::uint8_t>(in, "fusion flag") != 0;
  h.momentum = read_le<std::uint8_t>(in, "momentum flag") != 0 ? Momentum::kClassic : Momentum::kPrinted;
  h.degree_floor = read_le<double>(in, "degree floor");
  h.edge_threshold = read_le<double>(in, "edge threshold");

  const auto modalities = read_le<std::uint32_t>(in, "modality count");
  for (std::uint32_t m = 0; m < modalities; ++m) {
    const auto d = read_le<std::uint32_t>(in, "feature dimension");
    Eigen::VectorXd mean(d);
    Eigen::MatrixXd w(d, h.bits);
    detail::read_doubles(in, mean.data(), d, "means");
    detail::read_doubles(in, w.data(), static_cast<std::size_t>(w.size()), "projection");
    model.means.push_back(std::move(mean));
    model.projections.push_back(std::move(w));
  }
  const auto p = read_le<std::uint64_t>(in, "anchor count");
  model.anchor_codes = read_signs(in, h.bits, static_cast<Index>(p), "anchor codes");

  if (read_le<std::uint8_t>(in, "codes flag") != 0) {
    const auto n = read_le<std::uint64_t>(in, "code count");
    model.training_indices.resize(n);
    for (auto& i : model.training_indices) i = static_cast<Index>(read_le<std::uint64_t>(in, "training index"));
    model.codes = read_signs(in, h.bits, static_cast<Index>(n), "codes");
  }
  try {
    model.validate();
  } catch (const Error& e) {
    throw IoError(std::string("inconsistent model file: ") + e.what());
  }
  return model;
}

void save_model(const std::filesystem::path& path, const HashModel& model, bool include_codes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_model(out, model, include_codes);
}

HashModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return read_model(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace agsfh
