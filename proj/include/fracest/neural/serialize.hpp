#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "fracest/core/errors.hpp"
#include "fracest/detail/binary_io.hpp"
#include "fracest/neural/model.hpp"

namespace fracest::neural {

// Model file, little-endian throughout:
//
//   "FRHN" | u32 version
//   body   : descriptor  u32 input_dim | u32 layers | u32 hidden | u32 head1 | u32 head2
//                        | u32 loss | u32 epochs | u32 sequence_length | u64 seed
//            u32 tensor_count, then per tensor:
//                        u32 name_length | name bytes | u32 rank (2) | u32 rows | u32 cols
//                        | f32 values, row-major
//   u64 FNV-1a of the body
inline constexpr char kModelMagic[5] = "FRHN";
inline constexpr std::uint32_t kModelFormatVersion = 1;

template <class S>
void save_model(std::ostream& out, const Model<S>& model) {
  if (!model.all_finite()) throw ValidationError("refusing to save a model with non-finite weights");
  std::ostringstream body(std::ios::binary);
  const auto& a = model.architecture();
  const auto& m = model.meta();
  for (std::uint32_t v : {a.input_dim, a.layers, a.hidden, a.head1, a.head2,
                          static_cast<std::uint32_t>(m.loss), m.epochs, m.sequence_length}) {
    io::write_le(body, v);
  }
  io::write_le(body, m.seed);
  io::write_le<std::uint32_t>(body, static_cast<std::uint32_t>(model.tensors().size()));
  for (const auto& t : model.tensors()) {
    io::write_le<std::uint32_t>(body, static_cast<std::uint32_t>(t.name.size()));
    body.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    io::write_le<std::uint32_t>(body, 2);
    io::write_le<std::uint32_t>(body, static_cast<std::uint32_t>(t.value.rows()));
    io::write_le<std::uint32_t>(body, static_cast<std::uint32_t>(t.value.cols()));
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) io::write_le(body, static_cast<float>(t.value(i, j)));
    }
  }
  const std::string bytes = std::move(body).str();
  io::write_magic(out, kModelMagic);
  io::write_le(out, kModelFormatVersion);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  io::write_le(out, io::fnv1a(bytes.data(), bytes.size()));
  if (!out) throw IoError("failed writing model");
}

inline Model<float> load_model(std::istream& in) {
  io::expect_magic(in, kModelMagic, "model file");
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    throw VersionMismatchError("model file version " + std::to_string(version) + " (expected " +
                               std::to_string(kModelFormatVersion) + ")");
  }
  std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (rest.size() < 8) throw CorruptFileError("model file: truncated");
  const std::size_t body_size = rest.size() - 8;
  std::istringstream tail(rest.substr(body_size), std::ios::binary);
  if (io::read_le<std::uint64_t>(tail) != io::fnv1a(rest.data(), body_size)) {
    throw CorruptFileError("model file: checksum mismatch (truncated or damaged)");
  }
  rest.resize(body_size);
  std::istringstream body(std::move(rest), std::ios::binary);

  Architecture arch;
  arch.input_dim = io::read_le<std::uint32_t>(body);
  arch.layers = io::read_le<std::uint32_t>(body);
  arch.hidden = io::read_le<std::uint32_t>(body);
  arch.head1 = io::read_le<std::uint32_t>(body);
  arch.head2 = io::read_le<std::uint32_t>(body);
  TrainingMeta meta;
  const auto loss = io::read_le<std::uint32_t>(body);
  if (loss > 1) throw CorruptFileError("model file: unknown loss kind");
  meta.loss = static_cast<LossKind>(loss);
  meta.epochs = io::read_le<std::uint32_t>(body);
  meta.sequence_length = io::read_le<std::uint32_t>(body);
  meta.seed = io::read_le<std::uint64_t>(body);

  if (arch.hidden > 65536 || arch.head1 > 65536 || arch.head2 > 65536 || arch.layers > 64) {
    throw CorruptFileError("model file: implausible architecture");
  }
  Model<float> model;
  try {
    model = Model<float>(arch);
  } catch (const ValidationError& e) {
    throw CorruptFileError(std::string("model file: ") + e.what());
  }
  model.meta() = meta;

  const auto count = io::read_le<std::uint32_t>(body);
  if (count != model.tensors().size()) throw CorruptFileError("model file: tensor count mismatch");
  for (auto& t : model.tensors()) {
    const auto len = io::read_le<std::uint32_t>(body);
    if (len > 256) throw CorruptFileError("model file: implausible tensor name");
    std::string name(len, '\0');
    if (!body.read(name.data(), len)) throw CorruptFileError("unexpected end of file");
    if (name != t.name) throw CorruptFileError("model file: expected tensor '" + t.name + "', found '" + name + "'");
    const auto rank = io::read_le<std::uint32_t>(body);
    const auto rows = io::read_le<std::uint32_t>(body);
    const auto cols = io::read_le<std::uint32_t>(body);
    if (rank != 2 || rows != t.value.rows() || cols != t.value.cols()) {
      throw CorruptFileError("model file: shape mismatch for '" + name + "'");
    }
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) t.value(i, j) = io::read_le<float>(body);
    }
  }
  if (body.peek() != std::char_traits<char>::eof()) throw CorruptFileError("model file: trailing bytes");
  if (!model.all_finite()) throw CorruptFileError("model file: non-finite weights");
  return model;
}

template <class S>
void save_model(const std::string& path, const Model<S>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save_model(out, model);
}

inline Model<float> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model '" + path + "'");
  return load_model(in);
}

}  // namespace fracest::neural
