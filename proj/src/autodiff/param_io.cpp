#include "clfd/autodiff/param_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace clfd::ad {
namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) {
      r = (r << 8) | ((v >> (8 * i)) & 0xffU);
    }
    return r;
  } else {
    return v;
  }
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void write_blob(const std::filesystem::path& path, const Eigen::VectorXd& values) {
  std::vector<std::uint64_t> words(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    words[static_cast<std::size_t>(i)] = to_little_endian(std::bit_cast<std::uint64_t>(values[i]));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

Eigen::VectorXd read_blob(const std::filesystem::path& path,
                          std::optional<std::size_t> expected_length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes % sizeof(std::uint64_t) != 0) {
    throw std::runtime_error(path.string() + ": size is not a multiple of 8 bytes");
  }
  const std::size_t n = bytes / sizeof(std::uint64_t);
  if (expected_length && *expected_length != n) {
    throw std::runtime_error(path.string() + ": expected " + std::to_string(*expected_length) +
                             " values, found " + std::to_string(n));
  }
  std::vector<std::uint64_t> words(n);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
  Eigen::VectorXd values(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    values[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(to_little_endian(words[i]));
  }
  return values;
}

nlohmann::json architecture_to_json(const Architecture& arch) {
  return nlohmann::json{{"input_dim", arch.input_dim},
                        {"hidden_layers", arch.hidden_layers},
                        {"output_dim", arch.output_dim},
                        {"activation", to_string(arch.activation)}};
}

Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture arch;
  arch.input_dim = j.at("input_dim").get<std::size_t>();
  arch.hidden_layers = j.at("hidden_layers").get<std::vector<std::size_t>>();
  arch.output_dim = j.at("output_dim").get<std::size_t>();
  arch.activation = activation_from_string(j.at("activation").get<std::string>());
  arch.validate();
  return arch;
}

void save_params(const ParamVector& params, const std::filesystem::path& stem,
                 std::uint64_t seed) {
  params.validate();
  nlohmann::json manifest{{"architecture", architecture_to_json(params.architecture)},
                          {"length", params.size()},
                          {"seed", seed},
                          {"encoding", "float64-le"}};
  std::ofstream out(with_suffix(stem, ".json"));
  if (!out) {
    throw std::runtime_error("cannot write " + with_suffix(stem, ".json").string());
  }
  out << manifest.dump(2) << '\n';
  write_blob(with_suffix(stem, ".bin"), params.values);
}

ParamVector load_params(const std::filesystem::path& stem) {
  std::ifstream in(with_suffix(stem, ".json"));
  if (!in) {
    throw std::runtime_error("cannot open " + with_suffix(stem, ".json").string());
  }
  const auto manifest = nlohmann::json::parse(in);
  ParamVector p;
  p.architecture = architecture_from_json(manifest.at("architecture"));
  const auto length = manifest.at("length").get<std::size_t>();
  if (length != count_params(p.architecture)) {
    throw std::runtime_error(stem.string() + ": manifest length disagrees with architecture");
  }
  p.values = read_blob(with_suffix(stem, ".bin"), length);
  p.validate();
  return p;
}

}  // namespace clfd::ad
