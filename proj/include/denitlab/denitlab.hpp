/*
 * Copyright 2026 The denitlab Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DENITLAB_DENITLAB_HPP_
#define DENITLAB_DENITLAB_HPP_

#include "denitlab/ablation.hpp"
#include "denitlab/anomaly.hpp"
#include "denitlab/baselines.hpp"
#include "denitlab/dataset.hpp"
#include "denitlab/error.hpp"
#include "denitlab/evaluation.hpp"
#include "denitlab/experiment.hpp"
#include "denitlab/hyperopt.hpp"
#include "denitlab/model.hpp"
#include "denitlab/preprocess.hpp"
#include "denitlab/synthpilot.hpp"
#include "denitlab/util.hpp"

#endif  // DENITLAB_DENITLAB_HPP_
