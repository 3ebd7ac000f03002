#pragma once

// Umbrella header.

#include "rwsre/env.hpp"
#include "rwsre/errors.hpp"
#include "rwsre/io.hpp"
#include "rwsre/limits.hpp"
#include "rwsre/numerics.hpp"
#include "rwsre/parallel.hpp"
#include "rwsre/quenched.hpp"
#include "rwsre/random.hpp"
#include "rwsre/reflected.hpp"
#include "rwsre/stats.hpp"
#include "rwsre/theta.hpp"
#include "rwsre/verify.hpp"
#include "rwsre/walk.hpp"
