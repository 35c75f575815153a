#include "reachlab/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "reachlab/errors.hpp"

namespace reachlab {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd read_vec(const json& j, const std::string& name, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
    throw DataError("checkpoint: " + name + " must hold " + std::to_string(n) + " numbers");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw DataError("checkpoint: " + name + " contains a non-number");
    v[i] = j[i].get<double>();
  }
  return v;
}

}  // namespace

std::string serialize_checkpoint(const PolicyCheckpoint& ckpt) {
  const Mlp& net = ckpt.actor.net;
  json layers = json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    const LayerShape& s = net.layers()[l];
    // out x in, stored row by row
    const Eigen::MatrixXd w = net.weight(l);
    std::vector<double> rows;
    rows.reserve(w.size());
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) rows.push_back(w(r, c));
    layers.push_back({{"in", s.in},
                      {"out", s.out},
                      {"activation", to_string(s.activation)},
                      {"weights", rows},
                      {"bias", vec(net.bias(l))}});
  }
  json j;
  j["format_version"] = ckpt.format_version;
  j["iteration"] = ckpt.iteration;
  j["config_hash"] = ckpt.config_hash;
  j["input_offset"] = vec(net.input_offset());
  j["input_scale"] = vec(net.input_scale());
  j["layers"] = layers;
  j["log_std"] = vec(ckpt.actor.log_std);
  return j.dump(1) + "\n";
}

PolicyCheckpoint parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  PolicyCheckpoint ck;
  try {
    ck.format_version = j.at("format_version").get<int>();
    if (ck.format_version != kCheckpointFormatVersion)
      throw DataError("checkpoint: unsupported format_version " + std::to_string(ck.format_version));
    ck.iteration = j.at("iteration").get<int>();
    ck.config_hash = j.at("config_hash").get<std::string>();

    std::vector<LayerShape> shapes;
    const json& layers = j.at("layers");
    if (!layers.is_array() || layers.empty()) throw DataError("checkpoint: no layers");
    for (const auto& l : layers) {
      LayerShape s{l.at("in").get<int>(), l.at("out").get<int>(),
                   activation_from_string(l.at("activation").get<std::string>())};
      if (s.in < 1 || s.out < 1) throw DataError("checkpoint: layer sizes must be positive");
      if (!shapes.empty() && shapes.back().out != s.in)
        throw DataError("checkpoint: layer " + std::to_string(shapes.size()) + " input " +
                        std::to_string(s.in) + " does not match previous output " +
                        std::to_string(shapes.back().out));
      shapes.push_back(s);
    }
    Mlp net(shapes);
    for (int l = 0; l < net.num_layers(); ++l) {
      const std::string name = "layers[" + std::to_string(l) + "]";
      const Eigen::VectorXd w =
          read_vec(layers[l].at("weights"), name + ".weights", Eigen::Index{shapes[l].in} * shapes[l].out);
      auto W = net.weight(l);
      for (int r = 0; r < shapes[l].out; ++r)
        for (int c = 0; c < shapes[l].in; ++c) W(r, c) = w[Eigen::Index{r} * shapes[l].in + c];
      net.bias(l) = read_vec(layers[l].at("bias"), name + ".bias", shapes[l].out);
    }
    net.set_input_transform(read_vec(j.at("input_offset"), "input_offset", net.input_dim()),
                            read_vec(j.at("input_scale"), "input_scale", net.input_dim()));
    ck.actor.net = std::move(net);
    ck.actor.log_std = read_vec(j.at("log_std"), "log_std", ck.actor.net.output_dim());
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const PolicyCheckpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_checkpoint(ckpt);
  if (!out) throw IoError("write failed for " + path.string());
}

PolicyCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace reachlab
