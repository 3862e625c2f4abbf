#include "memesent/checkpoint.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace memesent::model {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs are little-endian");

constexpr const char* kMagic = "MEMESENT-CHECKPOINT 1";

template <typename Scalar>
constexpr const char* dtype_name() {
  return sizeof(Scalar) == 4 ? "f32" : "f64";
}

nlohmann::json config_json(const ClassifierConfig& c) {
  return {{"input_width", c.input_width}, {"hidden", c.hidden}, {"bilstm_layers", c.bilstm_layers},
          {"head_hidden", c.head_hidden}};
}

CheckpointInfo parse_header(const std::string& line, const std::string& path, nlohmann::json* manifest) {
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": bad checkpoint header: " + e.what());
  }
  CheckpointInfo info;
  try {
    info.variant = parse_variant(h.at("variant").get<std::string>());
    const auto& c = h.at("config");
    info.config.input_width = c.at("input_width").get<int>();
    info.config.hidden = c.at("hidden").get<int>();
    info.config.bilstm_layers = c.at("bilstm_layers").get<int>();
    info.config.head_hidden = c.at("head_hidden").get<int>();
    info.config.validate();
    info.seed = h.at("seed").get<std::uint64_t>();
    info.epoch = h.at("epoch").get<int>();
    info.dtype = h.at("dtype").get<std::string>();
    if (info.dtype != "f32" && info.dtype != "f64") throw InputError("unknown dtype '" + info.dtype + "'");
    if (h.contains("metadata")) {
      for (const auto& [k, v] : h.at("metadata").items()) info.metadata[k] = v.get<std::string>();
    }
    if (manifest != nullptr) *manifest = h.at("tensors");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": bad checkpoint header: " + e.what());
  } catch (const InputError& e) {
    throw InputError(path + ": bad checkpoint header: " + e.what());
  }
  return info;
}

std::ifstream open_checked(const std::string& path, std::string& header_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  std::string magic;
  std::getline(in, magic);
  if (magic != kMagic) throw InputError(path + ": not a checkpoint file");
  if (!std::getline(in, header_line)) throw InputError(path + ": truncated checkpoint header");
  return in;
}

template <typename Stored, typename Scalar>
void read_blob(std::istream& in, MatrixX<Scalar>& m, const std::string& path) {
  std::vector<Stored> buf(static_cast<std::size_t>(m.size()));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(Stored)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(Stored))) {
    throw InputError(path + ": truncated tensor data");
  }
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(buf[static_cast<std::size_t>(i)]);
}

}  // namespace

template <typename Scalar>
void save_checkpoint(const std::string& path, const ClassifierParams<Scalar>& params, const CheckpointInfo& info) {
  nlohmann::json h;
  h["variant"] = variant_name(params.variant);
  h["config"] = config_json(params.config);
  h["seed"] = info.seed;
  h["epoch"] = info.epoch;
  h["dtype"] = dtype_name<Scalar>();
  h["metadata"] = info.metadata;
  auto tensors = params.tensors();
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& t : tensors) manifest.push_back({{"name", t.name}, {"shape", {t.value->rows(), t.value->cols()}}});
  h["tensors"] = manifest;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint '" + path + "'");
  out << kMagic << '\n' << h.dump() << '\n';
  for (const auto& t : tensors) {
    out.write(reinterpret_cast<const char*>(t.value->data()),
              static_cast<std::streamsize>(static_cast<std::size_t>(t.value->size()) * sizeof(Scalar)));
  }
  if (!out) throw InputError("write failed for checkpoint '" + path + "'");
}

template <typename Scalar>
ClassifierParams<Scalar> load_checkpoint(const std::string& path, CheckpointInfo* info_out) {
  std::string header;
  auto in = open_checked(path, header);
  nlohmann::json manifest;
  const CheckpointInfo info = parse_header(header, path, &manifest);
  auto params = ClassifierParams<Scalar>::zeros(info.variant, info.config);
  auto tensors = params.tensors();
  if (!manifest.is_array() || manifest.size() != tensors.size()) {
    throw InputError(path + ": tensor manifest does not match the model configuration");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& entry = manifest[i];
    const auto& t = tensors[i];
    if (entry.value("name", "") != t.name || !entry.contains("shape") ||
        entry["shape"] != nlohmann::json::array({t.value->rows(), t.value->cols()})) {
      throw InputError(path + ": manifest entry " + std::to_string(i) + " does not match tensor '" + t.name + "'");
    }
    if (info.dtype == "f32") {
      read_blob<float>(in, *t.value, path);
    } else {
      read_blob<double>(in, *t.value, path);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw InputError(path + ": trailing bytes after tensor data");
  if (info_out != nullptr) *info_out = info;
  return params;
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
  std::string header;
  open_checked(path, header);
  return parse_header(header, path, nullptr);
}

template void save_checkpoint<float>(const std::string&, const ClassifierParams<float>&, const CheckpointInfo&);
template void save_checkpoint<double>(const std::string&, const ClassifierParams<double>&, const CheckpointInfo&);
template ClassifierParams<float> load_checkpoint<float>(const std::string&, CheckpointInfo*);
template ClassifierParams<double> load_checkpoint<double>(const std::string&, CheckpointInfo*);

}  // namespace memesent::model
