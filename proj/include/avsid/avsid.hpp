#pragma once

// Umbrella header: audio-visual speaker identification toolkit.

#include "avsid/detection.hpp"
#include "avsid/error.hpp"
#include "avsid/fft.hpp"
#include "avsid/fusion.hpp"
#include "avsid/geometry.hpp"
#include "avsid/image.hpp"
#include "avsid/io.hpp"
#include "avsid/linalg.hpp"
#include "avsid/localization.hpp"
#include "avsid/mic_array.hpp"
#include "avsid/pipeline.hpp"
#include "avsid/recognition.hpp"
#include "avsid/rng.hpp"
#include "avsid/scene.hpp"
#include "avsid/serialize.hpp"
#include "avsid/signal.hpp"
#include "avsid/toy_models.hpp"
