// Copyright 2026 The OASS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the toy four-stage backbone (deformable embeddings in stages 2 and 4)
// on a random input and gradient-checks every block type.

#include <cstdio>

#include "oass/nn/dpe.hpp"
#include "oass/nn/gradcheck.hpp"

int main() {
  using namespace oass::nn;
  oass::Rng rng(1);

  Tensor x({32, 32, 3});
  for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
  const auto configs = default_stage_configs(8);
  const BackboneParams params = init_backbone(configs, 3, rng);
  const auto features = backbone_forward(x, params);
  for (std::size_t s = 0; s < features.size(); ++s)
    std::printf("stage %zu: %zux%zux%zu (%s)\n", s + 1, features[s].shape[0],
                features[s].shape[1], features[s].shape[2],
                configs[s].use_dpe ? "deformable" : "plain");

  for (const auto block :
       {GradCheckBlock::kGap, GradCheckBlock::kPool, GradCheckBlock::kUa, GradCheckBlock::kDpe}) {
    const auto report = grad_check(block, 0, 1e-5);
    std::printf("gradcheck %-4s: max relative error %.3e over %zu coordinates\n",
                to_string(block), report.max_rel_error, report.coords_checked);
  }
  return 0;
}
