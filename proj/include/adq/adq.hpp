/*
 * Copyright 2026 The ADQ Authors.
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

#ifndef ADQ_ADQ_HPP_
#define ADQ_ADQ_HPP_

#include "adq/aggregation.hpp"
#include "adq/common.hpp"
#include "adq/config.hpp"
#include "adq/dimensions.hpp"
#include "adq/drift.hpp"
#include "adq/generator.hpp"
#include "adq/harness.hpp"
#include "adq/mutation.hpp"
#include "adq/orchestrator.hpp"
#include "adq/predictor.hpp"
#include "adq/rng.hpp"
#include "adq/store.hpp"
#include "adq/windowing.hpp"

#endif  // ADQ_ADQ_HPP_
