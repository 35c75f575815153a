#ifndef REACHLAB_MLP_HPP_
#define REACHLAB_MLP_HPP_

#include <Eigen/Core>

#include <random>
#include <string>
#include <vector>

namespace reachlab {

enum class Activation { kTanh, kIdentity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct LayerShape {
  int in = 0;
  int out = 0;
  Activation activation = Activation::kTanh;

  bool operator==(const LayerShape&) const = default;
};

// Dense feed-forward network. All weights and biases live in one flat
// parameter vector so optimizers and checkpoints can treat them uniformly.
// Samples are stored as columns.
class Mlp {
 public:
  // Records the input of every layer and the pre-activation outputs so that
  // backward() can run without recomputing the forward pass.
  struct Tape {
    std::vector<Eigen::MatrixXd> inputs;
    std::vector<Eigen::MatrixXd> outputs;  // post-activation
  };

  Mlp() = default;
  explicit Mlp(std::vector<LayerShape> layers);

  // in -> hidden... (tanh) -> out (identity)
  static Mlp make(int in, const std::vector<int>& hidden, int out);

  int input_dim() const { return layers_.front().in; }
  int output_dim() const { return layers_.back().out; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<LayerShape>& layers() const { return layers_; }
  Eigen::Index num_params() const { return params_.size(); }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  // Column-major views into the flat parameter vector.
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  // Offsets of layer `l`'s weight block and bias block in params().
  Eigen::Index weight_offset(int layer) const { return offsets_[layer]; }
  Eigen::Index bias_offset(int layer) const {
    return offsets_[layer] + static_cast<Eigen::Index>(layers_[layer].in) * layers_[layer].out;
  }

  // Fixed (non-trained) input standardisation applied before the first
  // layer: x' = (x - offset) .* scale. Defaults to the identity.
  void set_input_transform(const Eigen::VectorXd& offset, const Eigen::VectorXd& scale);
  const Eigen::VectorXd& input_offset() const { return input_offset_; }
  const Eigen::VectorXd& input_scale() const { return input_scale_; }

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases; the last
  // layer's weights are additionally scaled by `output_gain`.
  void init(std::mt19937_64& rng, double output_gain = 1.0);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  // Returns d(loss)/d(input), taken with respect to the raw input.
  Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                           Eigen::VectorXd& grad) const;

 private:
  std::vector<LayerShape> layers_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
  Eigen::VectorXd input_offset_;
  Eigen::VectorXd input_scale_;

  Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) const;
};

}  // namespace reachlab

#endif  // REACHLAB_MLP_HPP_
