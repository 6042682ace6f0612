#pragma once

// Multi-threshold bag-of-tokens clone detection: run several search
// instances along a (similarity, block-length) threshold curve, prune
// redundant work with derived upper length bounds, and merge the results
// into one deduplicated report.

#include "clonecurve/blocks.hpp"
#include "clonecurve/curve.hpp"
#include "clonecurve/engine.hpp"
#include "clonecurve/error.hpp"
#include "clonecurve/formats.hpp"
#include "clonecurve/harness.hpp"
#include "clonecurve/orchestrator.hpp"
#include "clonecurve/tokenizer.hpp"
