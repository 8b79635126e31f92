// narasr/checkpoint.h

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

#ifndef NARASR_CHECKPOINT_H_
#define NARASR_CHECKPOINT_H_

#include <map>
#include <string>
#include <vector>

#include "narasr/params.h"

namespace narasr {

// Tensor archive:
//   "NARTNSR1", u32 tensor count,
//   per tensor: u16 name length, name, u8 rank, u32 dims[rank], u8 dtype,
//               raw little-endian data (dtype 0 = f32, 1 = f64),
//   u32 metadata length, metadata as "key=value\n" lines.
// All integers are little-endian.
enum class TensorDtype : uint8_t { kF32 = 0, kF64 = 1 };

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::map<std::string, std::string> metadata;

  const Tensor* Find(const std::string& name) const;
  // Deep copy of the values in `set` (not aliased).
  static Checkpoint FromParams(const ParamSet& set);
};

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt,
                    TensorDtype dtype = TensorDtype::kF64);
// Throws CheckpointError on malformed or truncated archives.
Checkpoint LoadCheckpoint(const std::string& path);

// Elementwise mean. Throws CheckpointError when the name sets or shapes
// differ; metadata of the first input is kept and "averaged_from" lists the
// sources when given.
Checkpoint AverageCheckpoints(const std::vector<Checkpoint>& inputs,
                              const std::vector<std::string>& sources = {});
Checkpoint AverageCheckpointFiles(const std::vector<std::string>& paths);

}  // namespace narasr

#endif  // NARASR_CHECKPOINT_H_
