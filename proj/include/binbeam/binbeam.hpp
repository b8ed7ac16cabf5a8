#pragma once

#include "binbeam/audio/buffer.hpp"
#include "binbeam/audio/stft.hpp"
#include "binbeam/audio/wav.hpp"
#include "binbeam/beam/hermitian2x2.hpp"
#include "binbeam/beam/mvdr_cw.hpp"
#include "binbeam/beam/noise_scm.hpp"
#include "binbeam/cli/runner.hpp"
#include "binbeam/metrics/bands.hpp"
#include "binbeam/metrics/interaural.hpp"
#include "binbeam/metrics/levels.hpp"
#include "binbeam/scene/config.hpp"
#include "binbeam/scene/experiment.hpp"
#include "binbeam/scene/render.hpp"
