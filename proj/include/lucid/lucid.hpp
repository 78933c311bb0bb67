#pragma once

// Umbrella header for the whole library.

#include "lucid/analysis.hpp"
#include "lucid/backends.hpp"
#include "lucid/config.hpp"
#include "lucid/domain.hpp"
#include "lucid/errors.hpp"
#include "lucid/http_backend.hpp"
#include "lucid/mock_backends.hpp"
#include "lucid/pipeline.hpp"
#include "lucid/prompts.hpp"
#include "lucid/protocol.hpp"
#include "lucid/review.hpp"
#include "lucid/runlog.hpp"
#include "lucid/stats.hpp"
#include "lucid/sweep.hpp"
