// Copyright 2026 The cfx Authors.
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

// Umbrella header.

#include "cfx/csv.hpp"
#include "cfx/errors.hpp"
#include "cfx/experiment.hpp"
#include "cfx/fixtures.hpp"
#include "cfx/generator.hpp"
#include "cfx/gradient.hpp"
#include "cfx/metrics.hpp"
#include "cfx/model.hpp"
#include "cfx/numerics.hpp"
#include "cfx/probe.hpp"
#include "cfx/random.hpp"
#include "cfx/report.hpp"
#include "cfx/semantics.hpp"
#include "cfx/text.hpp"
