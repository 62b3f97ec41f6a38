// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "padcheck/attention.hpp"
#include "padcheck/batch.hpp"
#include "padcheck/bugs.hpp"
#include "padcheck/conformer.hpp"
#include "padcheck/conv.hpp"
#include "padcheck/ctc.hpp"
#include "padcheck/harness.hpp"
#include "padcheck/layers.hpp"
#include "padcheck/parameters.hpp"
#include "padcheck/rng.hpp"
#include "padcheck/subjects.hpp"
#include "padcheck/tensor.hpp"
