// Copyright 2026 The trilemma-eval Authors
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

#include "trilemma/adversarial.hpp"
#include "trilemma/augment.hpp"
#include "trilemma/classifier.hpp"
#include "trilemma/dataset.hpp"
#include "trilemma/error.hpp"
#include "trilemma/feature_store.hpp"
#include "trilemma/fid.hpp"
#include "trilemma/genbench.hpp"
#include "trilemma/image.hpp"
#include "trilemma/manifold.hpp"
#include "trilemma/pipeline.hpp"
#include "trilemma/png_io.hpp"
#include "trilemma/record.hpp"
#include "trilemma/report.hpp"
#include "trilemma/ssim.hpp"
#include "trilemma/toy.hpp"
