#pragma once

// Umbrella header; pulls in the whole library except the HTTP transport
// (bubblesim/llm_http.hpp), which is opt-in because it drags in a socket
// library.

#include "bubblesim/accuracy.hpp"
#include "bubblesim/agents.hpp"
#include "bubblesim/artifacts.hpp"
#include "bubblesim/catalog.hpp"
#include "bubblesim/config.hpp"
#include "bubblesim/csv.hpp"
#include "bubblesim/errors.hpp"
#include "bubblesim/llm.hpp"
#include "bubblesim/metrics.hpp"
#include "bubblesim/prompts.hpp"
#include "bubblesim/recommenders.hpp"
#include "bubblesim/rng.hpp"
#include "bubblesim/sha1.hpp"
#include "bubblesim/simulation.hpp"
#include "bubblesim/strutil.hpp"
#include "bubblesim/svg.hpp"
#include "bubblesim/toml.hpp"
