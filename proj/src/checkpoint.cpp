#include "zerolog/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "zerolog/digest.hpp"
#include "zerolog/error.hpp"

namespace zerolog::nn {

namespace {

constexpr std::string_view kMagic = "zerolog-checkpoint";

void append_floats(std::string& out, const Vec<float>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(v[i]);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

Vec<float> read_floats(const std::string& bytes, std::size_t& pos, Eigen::Index count) {
  if (count < 0 || bytes.size() - pos < static_cast<std::size_t>(count) * 4)
    throw Error(ErrorKind::Format, "checkpoint: truncated parameter blob");
  Vec<float> v(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b)
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
    v[i] = std::bit_cast<float>(bits);
    pos += 4;
  }
  return v;
}

}  // namespace

nlohmann::json to_json(const NetworkConfig& c) {
  return {{"input_dim", c.input_dim},
          {"hidden_dim", c.hidden_dim},
          {"attention_dim", c.attention_dim},
          {"head_hidden_dim", c.head_hidden_dim}};
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "network config must be an object");
  NetworkConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "input_dim") c.input_dim = value.get<Eigen::Index>();
      else if (key == "hidden_dim") c.hidden_dim = value.get<Eigen::Index>();
      else if (key == "attention_dim") c.attention_dim = value.get<Eigen::Index>();
      else if (key == "head_hidden_dim") c.head_hidden_dim = value.get<Eigen::Index>();
      else throw Error(ErrorKind::Config, "unknown network key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, "network key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

std::string Checkpoint::to_bytes() const {
  if (params.theta_e.size() != network.extractor_size() ||
      params.theta_omega.size() != network.head_size() ||
      params.theta_d.size() != network.head_size())
    throw Error(ErrorKind::Config, "checkpoint: parameters do not match network config");

  nlohmann::json manifest = {
      {"format_version", kCheckpointVersion},
      {"network", to_json(network)},
      {"seed", seed},
      {"iteration", iteration},
      {"hyperparameters", hyperparameters},
      {"blobs",
       {{{"name", "theta_e"}, {"count", params.theta_e.size()}},
        {{"name", "theta_omega"}, {"count", params.theta_omega.size()}},
        {{"name", "theta_d"}, {"count", params.theta_d.size()}}}},
      {"encoding", "float32-le"},
  };
  const std::string text = manifest.dump(2) + "\n";
  std::string out = std::string(kMagic) + " " + std::to_string(kCheckpointVersion) + " " +
                    std::to_string(text.size()) + "\n" + text;
  out.reserve(out.size() + 4 * static_cast<std::size_t>(params.theta_e.size() +
                                                        2 * params.theta_d.size()));
  append_floats(out, params.theta_e);
  append_floats(out, params.theta_omega);
  append_floats(out, params.theta_d);
  return out;
}

Checkpoint Checkpoint::from_bytes(const std::string& bytes) {
  const auto eol = bytes.find('\n');
  if (eol == std::string::npos) throw Error(ErrorKind::Format, "checkpoint: missing header");
  std::istringstream header(bytes.substr(0, eol));
  std::string magic;
  int version = 0;
  std::size_t manifest_bytes = 0;
  if (!(header >> magic >> version >> manifest_bytes) || magic != kMagic)
    throw Error(ErrorKind::Format, "checkpoint: bad header");
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::Format, "checkpoint: unsupported format version " + std::to_string(version));
  std::size_t pos = eol + 1;
  if (bytes.size() - pos < manifest_bytes) throw Error(ErrorKind::Format, "checkpoint: truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(pos, manifest_bytes));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("checkpoint manifest: ") + e.what());
  }
  pos += manifest_bytes;

  Checkpoint ck;
  try {
    ck.network = network_config_from_json(manifest.at("network"));
    ck.seed = manifest.at("seed").get<std::uint64_t>();
    ck.iteration = manifest.at("iteration").get<std::uint64_t>();
    ck.hyperparameters = manifest.at("hyperparameters");
    const auto& blobs = manifest.at("blobs");
    if (blobs.size() != 3) throw Error(ErrorKind::Format, "checkpoint: expected three blobs");
    ck.params.theta_e = read_floats(bytes, pos, blobs[0].at("count").get<Eigen::Index>());
    ck.params.theta_omega = read_floats(bytes, pos, blobs[1].at("count").get<Eigen::Index>());
    ck.params.theta_d = read_floats(bytes, pos, blobs[2].at("count").get<Eigen::Index>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("checkpoint manifest: ") + e.what());
  }
  if (pos != bytes.size()) throw Error(ErrorKind::Format, "checkpoint: trailing bytes");
  if (ck.params.theta_e.size() != ck.network.extractor_size() ||
      ck.params.theta_omega.size() != ck.network.head_size() ||
      ck.params.theta_d.size() != ck.network.head_size())
    throw Error(ErrorKind::Format, "checkpoint: blob sizes do not match network config");
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Input, "cannot write checkpoint " + path.string());
  const auto bytes = to_bytes();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Input, "cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

std::string Checkpoint::digest() const { return sha256_hex(to_bytes()); }

NetworkParams<double> round_to_checkpoint(const NetworkParams<double>& params) {
  return params.cast<float>().cast<double>();
}

}  // namespace zerolog::nn
