#include "listpl/checkpoint.hpp"

#include <fstream>
#include <vector>

#include "json.hpp"

namespace listpl {

namespace {

constexpr const char* kFormat = "listpl-checkpoint";
constexpr int kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  nlohmann::json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["seed"] = checkpoint.seed;
  doc["step_count"] = checkpoint.step_count;

  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer<double>& layer : checkpoint.params.layers) {
    nlohmann::json entry;
    entry["output_dim"] = layer.weight.rows();
    entry["input_dim"] = layer.weight.cols();
    std::vector<double> weight;
    weight.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Index r = 0; r < layer.weight.rows(); ++r) {
      for (Index c = 0; c < layer.weight.cols(); ++c) weight.push_back(layer.weight(r, c));
    }
    entry["weight"] = std::move(weight);
    entry["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back(std::move(entry));
  }
  doc["layers"] = std::move(layers);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out << doc.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");

  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }

  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw DataError("'" + path + "' is not a model checkpoint");
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw DataError("unsupported checkpoint version in '" + path + "'");
    }

    Checkpoint checkpoint;
    checkpoint.seed = doc.at("seed").get<std::uint64_t>();
    checkpoint.step_count = doc.at("step_count").get<Index>();
    for (const nlohmann::json& entry : doc.at("layers")) {
      DenseLayer<double> layer;
      const Index rows = entry.at("output_dim").get<Index>();
      const Index cols = entry.at("input_dim").get<Index>();
      const auto weight = entry.at("weight").get<std::vector<double>>();
      const auto bias = entry.at("bias").get<std::vector<double>>();
      if (static_cast<Index>(weight.size()) != rows * cols ||
          static_cast<Index>(bias.size()) != rows) {
        throw DataError("checkpoint layer shape mismatch in '" + path + "'");
      }
      layer.weight.resize(rows, cols);
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
          layer.weight(r, c) = weight[static_cast<std::size_t>(r * cols + c)];
        }
      }
      layer.bias = Eigen::Map<const VectorX<double>>(bias.data(), rows);
      checkpoint.params.layers.push_back(std::move(layer));
    }
    return checkpoint;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint '" + path + "': " + e.what());
  }
}

}  // namespace listpl
