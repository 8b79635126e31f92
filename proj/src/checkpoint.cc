// src/checkpoint.cc

// Copyright 2026  The nar-asr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "narasr/checkpoint.h"

#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "narasr/errors.h"

namespace narasr {

namespace {

constexpr char kMagic[8] = {'N', 'A', 'R', 'T', 'N', 'S', 'R', '1'};

template <typename T>
void Put(std::string* out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i)
    out->push_back(static_cast<char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  template <typename T>
  T Get() {
    Need(sizeof(T));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string Bytes(size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Need(size_t n) {
    if (pos_ + n > bytes_.size()) throw CheckpointError(path_ + ": truncated archive");
  }

  std::string bytes_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

const Tensor* Checkpoint::Find(const std::string& name) const {
  for (const NamedTensor& e : tensors)
    if (e.first == name) return &e.second;
  return nullptr;
}

Checkpoint Checkpoint::FromParams(const ParamSet& set) {
  Checkpoint ckpt;
  for (const NamedTensor& e : set.entries()) {
    ckpt.tensors.emplace_back(
        e.first, Tensor::FromVector(e.second.shape(),
                                    std::vector<double>(e.second.data().begin(),
                                                        e.second.data().end())));
  }
  return ckpt;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt,
                    TensorDtype dtype) {
  std::string out(kMagic, sizeof(kMagic));
  Put<uint32_t>(&out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const NamedTensor& e : ckpt.tensors) {
    if (e.first.size() > 0xffff) throw CheckpointError("tensor name too long");
    Put<uint16_t>(&out, static_cast<uint16_t>(e.first.size()));
    out += e.first;
    const Shape& shape = e.second.shape();
    Put<uint8_t>(&out, static_cast<uint8_t>(shape.size()));
    for (int d : shape) Put<uint32_t>(&out, static_cast<uint32_t>(d));
    Put<uint8_t>(&out, static_cast<uint8_t>(dtype));
    for (double v : e.second.data()) {
      if (dtype == TensorDtype::kF32) {
        uint32_t bits;
        const float f = static_cast<float>(v);
        std::memcpy(&bits, &f, sizeof(bits));
        Put<uint32_t>(&out, bits);
      } else {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        Put<uint64_t>(&out, bits);
      }
    }
  }
  std::string meta;
  for (const auto& [key, value] : ckpt.metadata) {
    if (key.find_first_of("=\n") != std::string::npos ||
        value.find('\n') != std::string::npos) {
      throw CheckpointError("metadata entry '" + key + "' is not a single key=value line");
    }
    meta += key + "=" + value + "\n";
  }
  Put<uint32_t>(&out, static_cast<uint32_t>(meta.size()));
  out += meta;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot write checkpoint " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("failed writing " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path);
  Reader r(std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>()),
           path);
  if (r.Bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw CheckpointError(path + ": bad magic");
  Checkpoint ckpt;
  const uint32_t count = r.Get<uint32_t>();
  std::set<std::string> seen;
  for (uint32_t t = 0; t < count; ++t) {
    const std::string name = r.Bytes(r.Get<uint16_t>());
    if (!seen.insert(name).second) throw CheckpointError(path + ": duplicate tensor " + name);
    const int rank = r.Get<uint8_t>();
    Shape shape(rank);
    for (int& d : shape) d = static_cast<int>(r.Get<uint32_t>());
    const auto dtype = r.Get<uint8_t>();
    std::vector<double> values(ShapeNumel(shape));
    for (double& v : values) {
      if (dtype == static_cast<uint8_t>(TensorDtype::kF32)) {
        const uint32_t bits = r.Get<uint32_t>();
        float x;
        std::memcpy(&x, &bits, sizeof(x));
        v = x;
      } else if (dtype == static_cast<uint8_t>(TensorDtype::kF64)) {
        const uint64_t bits = r.Get<uint64_t>();
        std::memcpy(&v, &bits, sizeof(v));
      } else {
        throw CheckpointError(path + ": unknown dtype " + std::to_string(dtype) +
                              " for " + name);
      }
    }
    ckpt.tensors.emplace_back(name, Tensor::FromVector(shape, std::move(values)));
  }
  std::istringstream meta(r.Bytes(r.Get<uint32_t>()));
  std::string line;
  while (std::getline(meta, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError(path + ": bad metadata line");
    ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!r.done()) throw CheckpointError(path + ": trailing bytes");
  return ckpt;
}

Checkpoint AverageCheckpoints(const std::vector<Checkpoint>& inputs,
                              const std::vector<std::string>& sources) {
  if (inputs.empty()) throw CheckpointError("nothing to average");
  const Checkpoint& first = inputs[0];
  std::vector<std::vector<double>> sums;  // running means
  for (const NamedTensor& e : first.tensors)
    sums.emplace_back(e.second.data().begin(), e.second.data().end());
  for (size_t k = 1; k < inputs.size(); ++k) {
    const Checkpoint& other = inputs[k];
    if (other.tensors.size() != first.tensors.size()) {
      throw CheckpointError("checkpoint " + std::to_string(k) + " has " +
                            std::to_string(other.tensors.size()) + " tensors, expected " +
                            std::to_string(first.tensors.size()));
    }
    for (size_t i = 0; i < first.tensors.size(); ++i) {
      const std::string& name = first.tensors[i].first;
      const Tensor* t = other.Find(name);
      if (t == nullptr) throw CheckpointError("tensor " + name + " missing from checkpoint " + std::to_string(k));
      if (t->shape() != first.tensors[i].second.shape()) {
        throw CheckpointError("tensor " + name + " has shape " + ShapeToString(t->shape()) +
                              " in checkpoint " + std::to_string(k));
      }
      // Running mean: exact when every input holds the same value.
      auto data = t->data();
      const double count = static_cast<double>(k + 1);
      for (size_t j = 0; j < data.size(); ++j)
        sums[i][j] += (data[j] - sums[i][j]) / count;
    }
  }
  Checkpoint out;
  out.metadata = first.metadata;
  for (size_t i = 0; i < first.tensors.size(); ++i) {
    out.tensors.emplace_back(first.tensors[i].first,
                             Tensor::FromVector(first.tensors[i].second.shape(),
                                                std::move(sums[i])));
  }
  if (!sources.empty()) {
    std::string joined;
    for (const std::string& s : sources) joined += (joined.empty() ? "" : ",") + s;
    out.metadata["averaged_from"] = joined;
  }
  return out;
}

Checkpoint AverageCheckpointFiles(const std::vector<std::string>& paths) {
  std::vector<Checkpoint> inputs;
  for (const std::string& p : paths) inputs.push_back(LoadCheckpoint(p));
  return AverageCheckpoints(inputs, paths);
}

}  // namespace narasr
