// Copyright 2026 The SHAPr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "shapr/attacks.hpp"
#include "shapr/baselines.hpp"
#include "shapr/core_data.hpp"
#include "shapr/error.hpp"
#include "shapr/evalharness.hpp"
#include "shapr/io.hpp"
#include "shapr/knn_shapley.hpp"
#include "shapr/mlp.hpp"
#include "shapr/synth.hpp"
