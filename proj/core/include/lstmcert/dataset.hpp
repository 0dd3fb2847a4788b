#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace lstmcert {

struct Sample {
  std::vector<Eigen::VectorXd> sequence;
  int label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;
  int num_frames = 0;
  int frame_dim = 0;
};

enum class DatasetFormat { Idx, Jsonl };

// idx: `path` is "<images-file>,<labels-file>", standard big-endian IDX
// pair; pixels are scaled to [0,1] and each image is sliced top-to-bottom
// into num_frames contiguous bands.
// jsonl: one {"sequence": [[...], ...], "label": n} object per line
// (num_frames is ignored; the frame count comes from the data).
Dataset load_dataset(const std::string& path, DatasetFormat format, int num_frames);

void save_jsonl(const Dataset& dataset, const std::string& path);

}  // namespace lstmcert
