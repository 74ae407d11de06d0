// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cergo/bdd.hpp"
#include "cergo/cantor.hpp"
#include "cergo/encoding.hpp"
#include "cergo/error.hpp"
#include "cergo/experiments.hpp"
#include "cergo/foelner.hpp"
#include "cergo/group.hpp"
#include "cergo/growth.hpp"
#include "cergo/kucera.hpp"
#include "cergo/parallel.hpp"
#include "cergo/rational.hpp"
