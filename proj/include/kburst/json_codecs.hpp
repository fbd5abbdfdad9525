// Copyright 2026 The kburst Authors
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

#pragma once

#include <initializer_list>

#include <nlohmann/json.hpp>

#include "kburst/isp.hpp"
#include "kburst/kernels.hpp"
#include "kburst/model.hpp"
#include "kburst/synth.hpp"
#include "kburst/train.hpp"

namespace kburst {

using Json = nlohmann::ordered_json;

/// Rejects keys outside `allowed`; ctx names the object in the error message.
void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* ctx);

Json noise_to_json(const NoiseParams& p);
NoiseParams noise_from_json(const Json& j);

Json isp_to_json(const IspConfig& c);
IspConfig isp_from_json(const Json& j);

Json synth_to_json(const SynthConfig& c);
SynthConfig synth_from_json(const Json& j);

Json transform_to_json(const AffineTransform& t);
AffineTransform transform_from_json(const Json& j);

Json kernel_params_to_json(const KernelParams& p);
KernelParams kernel_params_from_json(const Json& j);

Json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j);

Json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

}  // namespace kburst
