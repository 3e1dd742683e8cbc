#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vtmm/error.hpp"
#include "vtmm/net.hpp"

namespace vtmm {

namespace {

constexpr std::array<char, 4> kMagic = {'V', 'T', 'M', 'M'};
constexpr std::uint32_t kMaxHeaderBytes = 1u << 20;

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& where) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(Errc::CorruptCheckpoint, where + ": truncated header");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
}

void get_f64s(std::istream& in, Vector& dst, const std::string& where) {
  std::vector<unsigned char> raw(dst.size() * 8);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw Error(Errc::CorruptCheckpoint, where + ": truncated parameter block");
  }
  for (std::size_t k = 0; k < dst.size(); ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{raw[k * 8 + i]} << (8 * i);
    dst[k] = std::bit_cast<double>(bits);
  }
}

nlohmann::json dims_to_json(const MatchingNetwork& net) {
  const NetDims& d = net.dims();
  return {
      {"video_in", d.video_in},
      {"text_in", d.text_in},
      {"projection", d.projection},
      {"head", d.head},
      {"projection_activation", d.projection_activation == Activation::Relu ? "relu" : "identity"},
      {"dropout", net.dropout_rate()},
  };
}

}  // namespace

void save_checkpoint(const MatchingNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write checkpoint " + path.string());
  const std::string header = dims_to_json(net).dump();
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const DenseLayer& layer : net.layers()) {
    for (double w : layer.weights) put_f64(out, w);
    for (double b : layer.bias) put_f64(out, b);
  }
  if (!out) throw Error(Errc::Io, "failed writing checkpoint " + path.string());
}

MatchingNetwork load_checkpoint(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open checkpoint " + where);

  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(Errc::CorruptCheckpoint, where + ": missing VTMM magic");
  }
  const std::uint32_t version = get_u32(in, where);
  if (version != kCheckpointVersion) {
    throw Error(Errc::VersionMismatch, where + ": format version " + std::to_string(version) + ", expected " +
                                           std::to_string(kCheckpointVersion));
  }
  const std::uint32_t header_len = get_u32(in, where);
  if (header_len > kMaxHeaderBytes) throw Error(Errc::CorruptCheckpoint, where + ": implausible header length");
  std::string header(header_len, '\0');
  if (!in.read(header.data(), header_len)) throw Error(Errc::CorruptCheckpoint, where + ": truncated header");

  NetDims dims;
  double dropout = 0.0;
  try {
    const auto j = nlohmann::json::parse(header);
    dims.video_in = j.at("video_in").get<std::size_t>();
    dims.text_in = j.at("text_in").get<std::size_t>();
    dims.projection = j.at("projection").get<std::size_t>();
    dims.head = j.at("head").get<std::vector<std::size_t>>();
    const auto act = j.at("projection_activation").get<std::string>();
    if (act == "relu") {
      dims.projection_activation = Activation::Relu;
    } else if (act == "identity") {
      dims.projection_activation = Activation::Identity;
    } else {
      throw Error(Errc::CorruptCheckpoint, where + ": unknown activation '" + act + "'");
    }
    dropout = j.value("dropout", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptCheckpoint, where + ": bad dimension table: " + e.what());
  }

  MatchingNetwork net(dims, dropout);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    DenseLayer& layer = net.mutable_layer(l);
    get_f64s(in, layer.weights, where);
    get_f64s(in, layer.bias, where);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(Errc::CorruptCheckpoint, where + ": trailing bytes after parameters");
  }
  return net;
}

MatchingNetwork load_checkpoint(const std::filesystem::path& path, const NetDims& expected) {
  MatchingNetwork net = load_checkpoint(path);
  if (!(net.dims() == expected)) {
    throw Error(Errc::DimensionMismatch, path.string() + ": checkpoint dimensions differ from the expected network");
  }
  return net;
}

}  // namespace vtmm
