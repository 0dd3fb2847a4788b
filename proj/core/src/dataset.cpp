#include "lstmcert/dataset.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lstmcert {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("dataset: " + what); }

std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) fail(std::string("truncated ") + what);
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, int num_frames) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) fail("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) fail("cannot open " + labels_path);

  const std::uint32_t img_magic = read_be32(img, "image magic");
  if (img_magic != 0x00000803u)
    fail("bad image magic number " + std::to_string(img_magic));
  const std::uint32_t lab_magic = read_be32(lab, "label magic");
  if (lab_magic != 0x00000801u)
    fail("bad label magic number " + std::to_string(lab_magic));

  const std::uint32_t count = read_be32(img, "image count");
  const std::uint32_t rows = read_be32(img, "row count");
  const std::uint32_t cols = read_be32(img, "column count");
  const std::uint32_t lab_count = read_be32(lab, "label count");
  if (count != lab_count) fail("image/label count mismatch");

  const int pixels = static_cast<int>(rows * cols);
  if (num_frames <= 0 || pixels % num_frames != 0)
    fail("image size " + std::to_string(pixels) + " is not divisible into f=" +
         std::to_string(num_frames) + " frames");
  const int frame_dim = pixels / num_frames;

  Dataset ds;
  ds.num_frames = num_frames;
  ds.frame_dim = frame_dim;
  std::vector<unsigned char> raw(pixels);
  int max_label = 0;
  for (std::uint32_t s = 0; s < count; ++s) {
    if (!img.read(reinterpret_cast<char*>(raw.data()), pixels)) fail("truncated image data");
    char lbl;
    if (!lab.read(&lbl, 1)) fail("truncated label data");
    Sample sample;
    sample.label = static_cast<unsigned char>(lbl);
    max_label = std::max(max_label, sample.label);
    sample.sequence.reserve(num_frames);
    for (int t = 0; t < num_frames; ++t) {
      Eigen::VectorXd frame(frame_dim);
      for (int i = 0; i < frame_dim; ++i)
        frame(i) = raw[t * frame_dim + i] / 255.0;
      sample.sequence.push_back(std::move(frame));
    }
    ds.samples.push_back(std::move(sample));
  }
  ds.num_classes = max_label + 1;
  return ds;
}

Dataset load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  Dataset ds;
  std::string line;
  int line_no = 0;
  int max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("sequence") || !j.contains("label"))
      fail("line " + std::to_string(line_no) + ": missing sequence or label");
    Sample sample;
    sample.label = j["label"].get<int>();
    max_label = std::max(max_label, sample.label);
    for (const auto& jf : j["sequence"]) {
      Eigen::VectorXd frame(jf.size());
      for (std::size_t i = 0; i < jf.size(); ++i) frame(static_cast<int>(i)) = jf[i].get<double>();
      sample.sequence.push_back(std::move(frame));
    }
    if (sample.sequence.empty()) fail("line " + std::to_string(line_no) + ": empty sequence");
    if (ds.samples.empty()) {
      ds.num_frames = static_cast<int>(sample.sequence.size());
      ds.frame_dim = static_cast<int>(sample.sequence[0].size());
    } else if (static_cast<int>(sample.sequence.size()) != ds.num_frames ||
               static_cast<int>(sample.sequence[0].size()) != ds.frame_dim) {
      fail("line " + std::to_string(line_no) + ": inconsistent sequence shape");
    }
    ds.samples.push_back(std::move(sample));
  }
  if (ds.samples.empty()) fail("no samples in " + path);
  ds.num_classes = max_label + 1;
  return ds;
}

}  // namespace

Dataset load_dataset(const std::string& path, DatasetFormat format, int num_frames) {
  if (format == DatasetFormat::Jsonl) return load_jsonl(path);
  const auto comma = path.find(',');
  if (comma == std::string::npos)
    fail("idx path must be \"<images-file>,<labels-file>\"");
  return load_idx(path.substr(0, comma), path.substr(comma + 1), num_frames);
}

void save_jsonl(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  for (const Sample& s : dataset.samples) {
    json seq = json::array();
    for (const auto& frame : s.sequence) {
      json row = json::array();
      for (Eigen::Index i = 0; i < frame.size(); ++i) row.push_back(frame(i));
      seq.push_back(std::move(row));
    }
    json j;
    j["sequence"] = std::move(seq);
    j["label"] = s.label;
    out << j.dump() << '\n';
  }
}

}  // namespace lstmcert
