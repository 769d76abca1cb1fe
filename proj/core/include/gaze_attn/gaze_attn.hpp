#pragma once

#include "gaze_attn/align.hpp"
#include "gaze_attn/corpus_io.hpp"
#include "gaze_attn/divergence.hpp"
#include "gaze_attn/error.hpp"
#include "gaze_attn/matrix.hpp"
#include "gaze_attn/regression.hpp"
#include "gaze_attn/report.hpp"
#include "gaze_attn/resemblance.hpp"
#include "gaze_attn/rng.hpp"
#include "gaze_attn/sentence_id.hpp"
#include "gaze_attn/special_functions.hpp"
#include "gaze_attn/stats.hpp"
#include "gaze_attn/synth.hpp"
