#include "reachlab/mlp.hpp"

#include <cmath>

#include "reachlab/errors.hpp"

namespace reachlab {

std::string to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw DomainError("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<LayerShape> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DomainError("Mlp: at least one layer is required");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& s = layers_[l];
    if (s.in <= 0 || s.out <= 0) throw DomainError("Mlp: layer dimensions must be positive");
    if (l > 0 && layers_[l - 1].out != s.in)
      throw DomainError("Mlp: layer " + std::to_string(l) + " input does not match previous output");
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(s.in) * s.out + s.out;
  }
  params_ = Eigen::VectorXd::Zero(total);
  input_offset_ = Eigen::VectorXd::Zero(layers_.front().in);
  input_scale_ = Eigen::VectorXd::Ones(layers_.front().in);
}

void Mlp::set_input_transform(const Eigen::VectorXd& offset, const Eigen::VectorXd& scale) {
  if (offset.size() != input_dim() || scale.size() != input_dim())
    throw DomainError("Mlp::set_input_transform: size must match the input dimension");
  if (!offset.allFinite() || !scale.allFinite()) throw DomainError("Mlp::set_input_transform: non-finite entry");
  input_offset_ = offset;
  input_scale_ = scale;
}

Eigen::MatrixXd Mlp::standardize(const Eigen::MatrixXd& x) const {
  return ((x.colwise() - input_offset_).array().colwise() * input_scale_.array()).matrix();
}

Mlp Mlp::make(int in, const std::vector<int>& hidden, int out) {
  std::vector<LayerShape> layers;
  int prev = in;
  for (int h : hidden) {
    layers.push_back({prev, h, Activation::kTanh});
    prev = h;
  }
  layers.push_back({prev, out, Activation::kIdentity});
  return Mlp(std::move(layers));
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int l) {
  return {params_.data() + weight_offset(l), layers_[l].out, layers_[l].in};
}
Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int l) const {
  return {params_.data() + weight_offset(l), layers_[l].out, layers_[l].in};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int l) {
  return {params_.data() + bias_offset(l), layers_[l].out};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int l) const {
  return {params_.data() + bias_offset(l), layers_[l].out};
}

void Mlp::init(std::mt19937_64& rng, double output_gain) {
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layers_[l].in));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    auto b = bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
    if (l + 1 == num_layers()) w *= output_gain;
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_dim()) throw DomainError("Mlp::forward: input dimension mismatch");
  Eigen::MatrixXd h = standardize(x);
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * h;
    z.colwise() += bias(l);
    if (layers_[l].activation == Activation::kTanh) z = z.array().tanh();
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  if (x.rows() != input_dim()) throw DomainError("Mlp::forward: input dimension mismatch");
  tape.inputs.resize(layers_.size());
  tape.outputs.resize(layers_.size());
  tape.inputs[0] = standardize(x);
  const Eigen::MatrixXd* h = &tape.inputs[0];
  for (int l = 0; l < num_layers(); ++l) {
    if (l > 0) tape.inputs[l] = *h;
    Eigen::MatrixXd z = weight(l) * *h;
    z.colwise() += bias(l);
    if (layers_[l].activation == Activation::kTanh) z = z.array().tanh();
    tape.outputs[l] = std::move(z);
    h = &tape.outputs[l];
  }
  return tape.outputs.back();
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                              Eigen::VectorXd& grad) const {
  if (grad.size() != num_params()) throw DomainError("Mlp::backward: gradient size mismatch");
  Eigen::MatrixXd g = grad_output;
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (layers_[l].activation == Activation::kTanh)
      g.array() *= 1.0 - tape.outputs[l].array().square();
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + weight_offset(l), layers_[l].out, layers_[l].in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + bias_offset(l), layers_[l].out);
    gw.noalias() += g * tape.inputs[l].transpose();
    gb += g.rowwise().sum();
    g = (weight(l).transpose() * g).eval();
  }
  return (g.array().colwise() * input_scale_.array()).matrix();
}

}  // namespace reachlab
