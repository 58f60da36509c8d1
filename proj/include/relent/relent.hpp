// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "relent/countable.hpp"
#include "relent/errors.hpp"
#include "relent/generalization.hpp"
#include "relent/gibbs.hpp"
#include "relent/measure.hpp"
#include "relent/optimality.hpp"
#include "relent/partition.hpp"
#include "relent/risk.hpp"
#include "relent/serialize.hpp"
#include "relent/verify.hpp"
