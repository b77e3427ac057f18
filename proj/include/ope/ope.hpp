#pragma once

// Umbrella header for the outline-guided path exploration toolkit.

#include "ope/aggregation.hpp"
#include "ope/backend.hpp"
#include "ope/commands.hpp"
#include "ope/common.hpp"
#include "ope/config.hpp"
#include "ope/http_backend.hpp"
#include "ope/metrics.hpp"
#include "ope/mock_backend.hpp"
#include "ope/model.hpp"
#include "ope/prompting.hpp"
#include "ope/rl.hpp"
#include "ope/verifier.hpp"
