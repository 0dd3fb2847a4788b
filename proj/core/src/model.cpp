#include "lstmcert/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lstmcert/relax.hpp"
#include "lstmcert/rng.hpp"

namespace lstmcert {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("model: " + what); }

void check_finite(const Eigen::MatrixXd& m, const std::string& name) {
  if (!m.allFinite()) fail(name + " contains a non-finite value");
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) fail(name + " must be a 2-d array");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      fail(name + " has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) fail(name + " has a non-numeric entry");
      m(r, c) = j[r][c].get<double>();
    }
  }
  check_finite(m, name);
  return m;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& name) {
  if (!j.is_array()) fail(name + " must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(name + " has a non-numeric entry");
    v(i) = j[i].get<double>();
  }
  check_finite(v, name);
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

void LstmNetwork::validate() const {
  if (layers.empty()) fail("no layers");
  if (input_dim <= 0 || num_frames <= 0) fail("input_dim and num_frames must be positive");
  int in = input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LstmLayer& layer = layers[l];
    const std::string base = "layers[" + std::to_string(l) + "]";
    const int h = layer.hidden_dim();
    if (h <= 0) fail(base + ".W_f is empty");
    const auto check_gate = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                                const char* gate) {
      const std::string wn = base + ".W_" + gate;
      if (w.rows() != h || w.cols() != h + in)
        fail(wn + ": expected shape " + std::to_string(h) + "x" + std::to_string(h + in) +
             ", got " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
      if (b.size() != h)
        fail(base + ".b_" + gate + ": expected length " + std::to_string(h) + ", got " +
             std::to_string(b.size()));
      check_finite(w, wn);
      check_finite(b, base + ".b_" + gate);
    };
    check_gate(layer.w_f, layer.b_f, "f");
    check_gate(layer.w_i, layer.b_i, "i");
    check_gate(layer.w_c, layer.b_c, "C");
    check_gate(layer.w_o, layer.b_o, "o");
    in = h;
  }
  if (classifier.w_out.cols() != layers.back().hidden_dim())
    fail("classifier.W_out: expected " + std::to_string(layers.back().hidden_dim()) +
         " columns, got " + std::to_string(classifier.w_out.cols()));
  if (classifier.b_out.size() != classifier.w_out.rows())
    fail("classifier.b_out: length does not match W_out rows");
  check_finite(classifier.w_out, "classifier.W_out");
  check_finite(classifier.b_out, "classifier.b_out");
}

LstmNetwork load_network(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) fail("document is not an object");
  for (const char* key : {"version", "num_frames", "input_dim", "layers", "classifier"}) {
    if (!doc.contains(key)) fail(std::string("missing field ") + key);
  }

  LstmNetwork net;
  net.num_frames = doc["num_frames"].get<int>();
  net.input_dim = doc["input_dim"].get<int>();
  const json& layers = doc["layers"];
  if (!layers.is_array() || layers.empty()) fail("layers must be a nonempty array");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const json& jl = layers[l];
    const std::string base = "layers[" + std::to_string(l) + "]";
    LstmLayer layer;
    layer.w_f = parse_matrix(jl.at("W_f"), base + ".W_f");
    layer.w_i = parse_matrix(jl.at("W_i"), base + ".W_i");
    layer.w_c = parse_matrix(jl.at("W_C"), base + ".W_C");
    layer.w_o = parse_matrix(jl.at("W_o"), base + ".W_o");
    layer.b_f = parse_vector(jl.at("b_f"), base + ".b_f");
    layer.b_i = parse_vector(jl.at("b_i"), base + ".b_i");
    layer.b_c = parse_vector(jl.at("b_C"), base + ".b_C");
    layer.b_o = parse_vector(jl.at("b_o"), base + ".b_o");
    net.layers.push_back(std::move(layer));
  }
  net.classifier.w_out = parse_matrix(doc["classifier"].at("W_out"), "classifier.W_out");
  net.classifier.b_out = parse_vector(doc["classifier"].at("b_out"), "classifier.b_out");
  net.validate();
  return net;
}

LstmNetwork load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_network(ss.str());
}

std::string serialize_network(const LstmNetwork& net) {
  json doc;
  doc["version"] = 1;
  doc["num_frames"] = net.num_frames;
  doc["input_dim"] = net.input_dim;
  json layers = json::array();
  for (const LstmLayer& l : net.layers) {
    json jl;
    jl["W_f"] = matrix_to_json(l.w_f);
    jl["W_i"] = matrix_to_json(l.w_i);
    jl["W_C"] = matrix_to_json(l.w_c);
    jl["W_o"] = matrix_to_json(l.w_o);
    jl["b_f"] = vector_to_json(l.b_f);
    jl["b_i"] = vector_to_json(l.b_i);
    jl["b_C"] = vector_to_json(l.b_c);
    jl["b_o"] = vector_to_json(l.b_o);
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  doc["classifier"]["W_out"] = matrix_to_json(net.classifier.w_out);
  doc["classifier"]["b_out"] = vector_to_json(net.classifier.b_out);
  return doc.dump(1);
}

void save_network_file(const LstmNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  out << serialize_network(net) << '\n';
}

CellState cell_step(const LstmLayer& layer, const CellState& prev, const Eigen::VectorXd& x_t) {
  const int h = layer.hidden_dim();
  if (x_t.size() != layer.input_dim()) fail("cell_step: input dimension mismatch");
  if (prev.h.size() != h || prev.c.size() != h) fail("cell_step: state dimension mismatch");

  Eigen::VectorXd hx(h + x_t.size());
  hx << prev.h, x_t;

  const Eigen::VectorXd zf = layer.w_f * hx + layer.b_f;
  const Eigen::VectorXd zi = layer.w_i * hx + layer.b_i;
  const Eigen::VectorXd zc = layer.w_c * hx + layer.b_c;
  const Eigen::VectorXd zo = layer.w_o * hx + layer.b_o;

  CellState next;
  next.c.resize(h);
  next.h.resize(h);
  for (int j = 0; j < h; ++j) {
    const double f = sigmoid(zf(j));
    const double i = sigmoid(zi(j));
    const double ctil = std::tanh(zc(j));
    const double o = sigmoid(zo(j));
    next.c(j) = f * prev.c(j) + i * ctil;
    next.h(j) = o * std::tanh(next.c(j));
  }
  return next;
}

Eigen::VectorXd forward(const LstmNetwork& net, const std::vector<Eigen::VectorXd>& sequence) {
  if (static_cast<int>(sequence.size()) != net.num_frames)
    fail("forward: expected " + std::to_string(net.num_frames) + " frames, got " +
         std::to_string(sequence.size()));
  std::vector<Eigen::VectorXd> inputs = sequence;
  Eigen::VectorXd last_h;
  for (const LstmLayer& layer : net.layers) {
    CellState state{Eigen::VectorXd::Zero(layer.hidden_dim()),
                    Eigen::VectorXd::Zero(layer.hidden_dim())};
    std::vector<Eigen::VectorXd> outputs;
    outputs.reserve(inputs.size());
    for (const Eigen::VectorXd& x : inputs) {
      if (x.size() != layer.input_dim()) fail("forward: frame width mismatch");
      state = cell_step(layer, state, x);
      outputs.push_back(state.h);
    }
    last_h = state.h;
    inputs = std::move(outputs);
  }
  return net.classifier.w_out * last_h + net.classifier.b_out;
}

int predict(const LstmNetwork& net, const std::vector<Eigen::VectorXd>& sequence) {
  const Eigen::VectorXd logits = forward(net, sequence);
  int best = 0;
  for (int i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = i;
  }
  return best;
}

LstmNetwork random_network(int num_frames, int input_dim, int hidden_dim, int num_layers,
                           int num_classes, std::uint64_t seed, double scale) {
  Rng rng(seed);
  const auto rand_matrix = [&](int rows, int cols, double s) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = s * rng.normal();
    return m;
  };
  const auto rand_vector = [&](int n, double s) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = s * rng.normal();
    return v;
  };

  LstmNetwork net;
  net.num_frames = num_frames;
  net.input_dim = input_dim;
  int in = input_dim;
  for (int l = 0; l < num_layers; ++l) {
    const double s = scale / std::sqrt(static_cast<double>(hidden_dim + in));
    LstmLayer layer;
    layer.w_f = rand_matrix(hidden_dim, hidden_dim + in, s);
    layer.w_i = rand_matrix(hidden_dim, hidden_dim + in, s);
    layer.w_c = rand_matrix(hidden_dim, hidden_dim + in, s);
    layer.w_o = rand_matrix(hidden_dim, hidden_dim + in, s);
    layer.b_f = rand_vector(hidden_dim, 0.1);
    layer.b_i = rand_vector(hidden_dim, 0.1);
    layer.b_c = rand_vector(hidden_dim, 0.1);
    layer.b_o = rand_vector(hidden_dim, 0.1);
    net.layers.push_back(std::move(layer));
    in = hidden_dim;
  }
  const double s = scale / std::sqrt(static_cast<double>(hidden_dim));
  net.classifier.w_out = rand_matrix(num_classes, hidden_dim, s);
  net.classifier.b_out = rand_vector(num_classes, 0.1);
  net.validate();
  return net;
}

}  // namespace lstmcert
