#pragma once

#include "nftf/types.hpp"
#include "nftf/event.hpp"
#include "nftf/ledger.hpp"
#include "nftf/analytics.hpp"
#include "nftf/graph.hpp"
#include "nftf/null_model.hpp"
#include "nftf/similarity.hpp"
#include "nftf/synthgen.hpp"
#include "nftf/report.hpp"
