#pragma once

// Umbrella header for the full toolkit.

#include "voxkit/adapt.hpp"
#include "voxkit/core.hpp"
#include "voxkit/errors.hpp"
#include "voxkit/fft.hpp"
#include "voxkit/filters.hpp"
#include "voxkit/manifest.hpp"
#include "voxkit/mrc.hpp"
#include "voxkit/parallel.hpp"
#include "voxkit/rng.hpp"
#include "voxkit/spectral.hpp"
#include "voxkit/volume.hpp"
