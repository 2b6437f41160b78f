#include "dmeg/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dmeg {
namespace {

using nlohmann::json;

json tensor(const std::string& name, const Eigen::MatrixXd& m) {
  json values = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  }
  return {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"values", std::move(values)}};
}

json tensor(const std::string& name, const Eigen::VectorXd& v) {
  json values = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) values.push_back(v[i]);
  return {{"name", name}, {"shape", {v.size()}}, {"values", std::move(values)}};
}

const json& find_tensor(const json& tensors, const std::string& name) {
  for (const auto& t : tensors) {
    if (t.at("name") == name) return t;
  }
  throw std::runtime_error("checkpoint is missing tensor " + name);
}

Eigen::MatrixXd read_matrix(const json& tensors, const std::string& name) {
  const json& t = find_tensor(tensors, name);
  const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
  const auto values = t.at("values").get<std::vector<double>>();
  if (shape.size() != 2 || static_cast<std::size_t>(shape[0] * shape[1]) != values.size()) {
    throw std::runtime_error("checkpoint tensor " + name + " has inconsistent shape");
  }
  Eigen::MatrixXd m(shape[0], shape[1]);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = values[i++];
  }
  return m;
}

Eigen::VectorXd read_vector(const json& tensors, const std::string& name) {
  const json& t = find_tensor(tensors, name);
  const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
  const auto values = t.at("values").get<std::vector<double>>();
  if (shape.size() != 1 || static_cast<std::size_t>(shape[0]) != values.size()) {
    throw std::runtime_error("checkpoint tensor " + name + " has inconsistent shape");
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), shape[0]);
}

}  // namespace

std::string checkpoint_to_string(const HedgedNetwork& net) {
  json tensors = json::array();
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const std::string i = std::to_string(k);
    tensors.push_back(tensor("trunk." + i + ".weights", net.trunk[k].weights));
    tensors.push_back(tensor("trunk." + i + ".bias", net.trunk[k].bias));
    tensors.push_back(tensor("head." + i + ".weights", net.heads[k].weights));
    tensors.push_back(tensor("head." + i + ".bias", net.heads[k].bias));
  }
  json doc = {{"format", kCheckpointMagic},
              {"input_dim", net.input_dim},
              {"depth", net.depth()},
              {"tensors", std::move(tensors)}};
  return doc.dump();
}

HedgedNetwork checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kCheckpointMagic) {
    throw std::runtime_error("not a DMEG-CKPT-1 checkpoint");
  }
  HedgedNetwork net;
  net.input_dim = doc.at("input_dim").get<std::size_t>();
  const auto depth = doc.at("depth").get<std::size_t>();
  const json& tensors = doc.at("tensors");
  for (std::size_t k = 0; k < depth; ++k) {
    const std::string i = std::to_string(k);
    DenseLayer layer{read_matrix(tensors, "trunk." + i + ".weights"),
                     read_vector(tensors, "trunk." + i + ".bias"), Activation::relu};
    DenseLayer head{read_matrix(tensors, "head." + i + ".weights"),
                    read_vector(tensors, "head." + i + ".bias"), Activation::identity};
    const std::size_t expected_in = k == 0 ? net.input_dim : net.trunk.back().out_dim();
    if (layer.in_dim() != expected_in || layer.bias.size() != layer.weights.rows() ||
        head.out_dim() != 1 || head.in_dim() != layer.out_dim() || head.bias.size() != 1) {
      throw std::runtime_error("checkpoint layer " + i + " has inconsistent dimensions");
    }
    net.trunk.push_back(std::move(layer));
    net.heads.push_back(std::move(head));
  }
  return net;
}

void save_checkpoint(const HedgedNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_to_string(net) << '\n';
}

HedgedNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace dmeg
