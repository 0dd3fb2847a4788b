#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lstmcert/dataset.hpp"
#include "lstmcert/model.hpp"
#include "lstmcert/rng.hpp"
#include "lstmcert/runner.hpp"

using namespace lstmcert;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lstmcert_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

// Tiny IDX pair: `count` images of rows x cols incrementing pixels.
void write_idx_pair(const std::string& images, const std::string& labels, int count, int rows,
                    int cols) {
  std::ofstream img(images, std::ios::binary);
  write_be32(img, 0x00000803u);
  write_be32(img, count);
  write_be32(img, rows);
  write_be32(img, cols);
  for (int s = 0; s < count; ++s) {
    for (int i = 0; i < rows * cols; ++i) {
      img.put(static_cast<char>((s * 31 + i) % 256));
    }
  }
  std::ofstream lab(labels, std::ios::binary);
  write_be32(lab, 0x00000801u);
  write_be32(lab, count);
  for (int s = 0; s < count; ++s) lab.put(static_cast<char>(s % 10));
}

Dataset self_labeled_suite(const LstmNetwork& net, int count, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.num_frames = net.num_frames;
  ds.frame_dim = net.input_dim;
  for (int i = 0; i < count; ++i) {
    Sample s;
    for (int t = 0; t < net.num_frames; ++t) {
      Eigen::VectorXd v(net.input_dim);
      for (int k = 0; k < net.input_dim; ++k) v(k) = rng.uniform(-1, 1);
      s.sequence.push_back(std::move(v));
    }
    s.label = predict(net, s.sequence);
    ds.num_classes = std::max(ds.num_classes, s.label + 1);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// The CSV with the elapsed-seconds column blanked out.
std::string strip_timing(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      out << line << '\n';
      continue;
    }
    int commas = 0;
    std::string kept;
    for (char c : line) {
      if (c == ',') ++commas;
      if (commas == 5 && c != ',') continue;  // elapsed_s payload
      kept += c;
    }
    out << kept << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("idx ingestion frames images into contiguous bands") {
  TempDir tmp;
  write_idx_pair(tmp.file("img.idx"), tmp.file("lab.idx"), 3, 4, 2);
  const Dataset ds = load_dataset(tmp.file("img.idx") + "," + tmp.file("lab.idx"),
                                  DatasetFormat::Idx, 4);
  REQUIRE(ds.samples.size() == 3);
  CHECK(ds.num_frames == 4);
  CHECK(ds.frame_dim == 2);
  CHECK(ds.samples[0].label == 0);
  CHECK(ds.samples[2].label == 2);
  // First image pixels are 0,1,2,... scaled by 255.
  CHECK(ds.samples[0].sequence[0](1) == doctest::Approx(1.0 / 255.0));
  CHECK(ds.samples[0].sequence[3](1) == doctest::Approx(7.0 / 255.0));
}

TEST_CASE("idx ingestion rejects non-divisible frame counts") {
  TempDir tmp;
  write_idx_pair(tmp.file("img.idx"), tmp.file("lab.idx"), 1, 28, 28);
  std::string message;
  try {
    load_dataset(tmp.file("img.idx") + "," + tmp.file("lab.idx"), DatasetFormat::Idx, 5);
  } catch (const std::runtime_error& e) {
    message = e.what();
  }
  CHECK(message.find("f=5") != std::string::npos);
}

TEST_CASE("idx ingestion rejects a bad magic number") {
  TempDir tmp;
  std::ofstream bad(tmp.file("bad.idx"), std::ios::binary);
  write_be32(bad, 0xdeadbeefu);
  bad.close();
  std::ofstream lab(tmp.file("lab.idx"), std::ios::binary);
  write_be32(lab, 0x00000801u);
  write_be32(lab, 0);
  lab.close();
  CHECK_THROWS_AS(load_dataset(tmp.file("bad.idx") + "," + tmp.file("lab.idx"),
                               DatasetFormat::Idx, 4),
                  std::runtime_error);
}

TEST_CASE("jsonl ingestion parses one sample per line") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("data.jsonl"));
    out << R"({"sequence": [[0,1],[1,0]], "label": 1})" << '\n';
    out << R"({"sequence": [[0.5,0.25],[0,0]], "label": 0})" << '\n';
  }
  const Dataset ds = load_dataset(tmp.file("data.jsonl"), DatasetFormat::Jsonl, 0);
  REQUIRE(ds.samples.size() == 2);
  CHECK(ds.num_frames == 2);
  CHECK(ds.frame_dim == 2);
  CHECK(ds.samples[0].label == 1);
  CHECK(ds.samples[0].sequence[0](1) == 1.0);
  CHECK(ds.samples[1].sequence[0](0) == 0.5);
}

TEST_CASE("jsonl round-trips through save and load") {
  TempDir tmp;
  const LstmNetwork net = random_network(3, 2, 2, 1, 3, 5150);
  const Dataset ds = self_labeled_suite(net, 5, 77);
  save_jsonl(ds, tmp.file("suite.jsonl"));
  const Dataset back = load_dataset(tmp.file("suite.jsonl"), DatasetFormat::Jsonl, 0);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].label == ds.samples[i].label);
    for (int t = 0; t < ds.num_frames; ++t)
      CHECK(back.samples[i].sequence[t].isApprox(ds.samples[i].sequence[t], 0.0));
  }
}

TEST_CASE("run_verify writes rows and a nonincreasing accuracy summary") {
  TempDir tmp;
  const LstmNetwork net = random_network(2, 2, 2, 1, 3, 616);
  save_network_file(net, tmp.file("model.json"));
  save_jsonl(self_labeled_suite(net, 8, 91), tmp.file("suite.jsonl"));

  RunConfig cfg;
  cfg.model_path = tmp.file("model.json");
  cfg.dataset_path = tmp.file("suite.jsonl");
  cfg.epsilons = {0.005, 0.02};
  cfg.num_samples = 8;
  cfg.output_path = tmp.file("report.csv");
  const RunOutcome outcome = run_verify(cfg);
  REQUIRE(outcome.summaries.size() == 2);
  CHECK(outcome.summaries[0].robust >= outcome.summaries[1].robust);

  std::ifstream csv(tmp.file("report.csv"));
  std::string line;
  int rows = 0, comments = 0;
  std::getline(csv, line);
  CHECK(line.find("sample_index") == 0);
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    if (line[0] == '#')
      ++comments;
    else
      ++rows;
  }
  CHECK(rows >= 16);  // 8 samples at each of 2 epsilons
  CHECK(comments == 2);
}

TEST_CASE("run_verify with a minimal two-sample suite") {
  TempDir tmp;
  const LstmNetwork net = random_network(2, 2, 2, 1, 2, 33);
  save_network_file(net, tmp.file("model.json"));
  save_jsonl(self_labeled_suite(net, 2, 3), tmp.file("two.jsonl"));
  RunConfig cfg;
  cfg.model_path = tmp.file("model.json");
  cfg.dataset_path = tmp.file("two.jsonl");
  cfg.epsilons = {0.0};
  cfg.num_samples = 2;
  cfg.output_path = tmp.file("two.csv");
  const RunOutcome outcome = run_verify(cfg);
  REQUIRE(outcome.summaries.size() == 1);
  CHECK(outcome.summaries[0].robust == 2);
}

TEST_CASE("run_verify refuses a missing model file") {
  TempDir tmp;
  RunConfig cfg;
  cfg.model_path = tmp.file("absent.json");
  cfg.dataset_path = tmp.file("absent.jsonl");
  cfg.epsilons = {0.01};
  CHECK_THROWS_AS(run_verify(cfg), std::runtime_error);
  CHECK(!fs::exists(tmp.file("report.csv")));
}

TEST_CASE("reports are byte-identical apart from timing columns") {
  TempDir tmp;
  const LstmNetwork net = random_network(2, 2, 2, 1, 3, 1212);
  save_network_file(net, tmp.file("model.json"));
  save_jsonl(self_labeled_suite(net, 6, 21), tmp.file("suite.jsonl"));

  RunConfig cfg;
  cfg.model_path = tmp.file("model.json");
  cfg.dataset_path = tmp.file("suite.jsonl");
  cfg.epsilons = {0.01};
  cfg.num_samples = 6;
  cfg.seed = 9;

  cfg.output_path = tmp.file("a.csv");
  run_verify(cfg);
  cfg.output_path = tmp.file("b.csv");
  run_verify(cfg);
  CHECK(strip_timing(tmp.file("a.csv")) == strip_timing(tmp.file("b.csv")));
}

TEST_CASE("alpha sweep reports the grid and its argmax") {
  TempDir tmp;
  const LstmNetwork net = random_network(2, 2, 2, 1, 3, 1999);
  save_network_file(net, tmp.file("model.json"));
  save_jsonl(self_labeled_suite(net, 5, 17), tmp.file("suite.jsonl"));

  RunConfig cfg;
  cfg.model_path = tmp.file("model.json");
  cfg.dataset_path = tmp.file("suite.jsonl");
  cfg.epsilons = {0.02};
  cfg.num_samples = 5;

  const AlphaSweepResult res = run_alpha_sweep(cfg, {0.0, 0.5, 1.0});
  REQUIRE(res.curve.size() == 3);
  double best = -1e300;
  double best_alpha = -1.0;
  for (const auto& pt : res.curve) {
    if (pt.mean_margin > best) {
      best = pt.mean_margin;
      best_alpha = pt.alpha;
    }
  }
  CHECK(res.best_alpha == best_alpha);

  const AlphaSweepResult one = run_alpha_sweep(cfg, {0.674});
  REQUIRE(one.curve.size() == 1);
  CHECK(one.best_alpha == 0.674);
}
