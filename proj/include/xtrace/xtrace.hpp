#pragma once

#include "xtrace/amount.hpp"
#include "xtrace/dataset_io.hpp"
#include "xtrace/errors.hpp"
#include "xtrace/eval.hpp"
#include "xtrace/format.hpp"
#include "xtrace/group_trace.hpp"
#include "xtrace/orchestrator.hpp"
#include "xtrace/price_oracle.hpp"
#include "xtrace/report.hpp"
#include "xtrace/simgen.hpp"
#include "xtrace/single_trace.hpp"
#include "xtrace/transfer_store.hpp"
#include "xtrace/types.hpp"
