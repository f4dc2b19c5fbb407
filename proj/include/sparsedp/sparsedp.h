// Copyright 2026 The sparsedp Authors
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

#ifndef SPARSEDP_SPARSEDP_H_
#define SPARSEDP_SPARSEDP_H_

#include "sparsedp/accountant.h"
#include "sparsedp/config.h"
#include "sparsedp/embedding.h"
#include "sparsedp/error.h"
#include "sparsedp/io.h"
#include "sparsedp/mechanisms.h"
#include "sparsedp/memorization.h"
#include "sparsedp/noise_source.h"
#include "sparsedp/privacy_budget.h"
#include "sparsedp/sparse_erm.h"
#include "sparsedp/sparse_vector.h"
#include "sparsedp/trainer.h"

#endif  // SPARSEDP_SPARSEDP_H_
