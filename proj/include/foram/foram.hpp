#pragma once

// Umbrella header. image_io.hpp is left out on purpose: it pulls in the
// image codec libraries, which most users of the core algorithms don't need.

#include "foram/augment.hpp"
#include "foram/dataset.hpp"
#include "foram/errors.hpp"
#include "foram/eval.hpp"
#include "foram/geometry.hpp"
#include "foram/image.hpp"
#include "foram/pipeline.hpp"
#include "foram/rng.hpp"
#include "foram/synth.hpp"
