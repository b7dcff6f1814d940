#pragma once

#include "dcmmdf/common.hpp"
#include "dcmmdf/random.hpp"
#include "dcmmdf/model.hpp"
#include "dcmmdf/spectral.hpp"
#include "dcmmdf/assignment.hpp"
#include "dcmmdf/corners.hpp"
#include "dcmmdf/estimators.hpp"
#include "dcmmdf/metrics.hpp"
#include "dcmmdf/config.hpp"
#include "dcmmdf/harness.hpp"
#include "dcmmdf/netio.hpp"
#include "dcmmdf/serialize.hpp"
