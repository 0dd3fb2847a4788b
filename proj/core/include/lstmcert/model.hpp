#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace lstmcert {

// One LSTM layer: the four gate weight matrices act on [h_{t-1}, x_t].
struct LstmLayer {
  Eigen::MatrixXd w_f, w_i, w_c, w_o;  // [hidden x (hidden + input)]
  Eigen::VectorXd b_f, b_i, b_c, b_o;

  int hidden_dim() const { return static_cast<int>(w_f.rows()); }
  int input_dim() const { return static_cast<int>(w_f.cols()) - hidden_dim(); }
};

struct Classifier {
  Eigen::MatrixXd w_out;  // [classes x hidden]
  Eigen::VectorXd b_out;
};

struct LstmNetwork {
  std::vector<LstmLayer> layers;
  Classifier classifier;
  int input_dim = 0;
  int num_frames = 0;

  int num_layers() const { return static_cast<int>(layers.size()); }
  int hidden_dim() const { return layers.back().hidden_dim(); }
  int num_classes() const { return static_cast<int>(classifier.w_out.rows()); }
  // Throws std::runtime_error naming the offending tensor.
  void validate() const;
};

struct CellState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

// Parses the JSON model document and validates shapes and finiteness.
LstmNetwork load_network(const std::string& text);
LstmNetwork load_network_file(const std::string& path);
std::string serialize_network(const LstmNetwork& net);
void save_network_file(const LstmNetwork& net, const std::string& path);

CellState cell_step(const LstmLayer& layer, const CellState& prev, const Eigen::VectorXd& x_t);

Eigen::VectorXd forward(const LstmNetwork& net, const std::vector<Eigen::VectorXd>& sequence);

// Argmax of forward; ties break toward the lowest index.
int predict(const LstmNetwork& net, const std::vector<Eigen::VectorXd>& sequence);

// Seeded network with N(0, scale/sqrt(fan_in)) weights, used by tests and the
// gen-model command.
LstmNetwork random_network(int num_frames, int input_dim, int hidden_dim, int num_layers,
                           int num_classes, std::uint64_t seed, double scale = 1.0);

}  // namespace lstmcert
