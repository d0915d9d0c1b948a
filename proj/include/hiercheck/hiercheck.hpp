#pragma once

#include "hiercheck/binbeta.hpp"
#include "hiercheck/conflict.hpp"
#include "hiercheck/dataset.hpp"
#include "hiercheck/datasets.hpp"
#include "hiercheck/distributions.hpp"
#include "hiercheck/eb.hpp"
#include "hiercheck/errors.hpp"
#include "hiercheck/mcmc.hpp"
#include "hiercheck/normal.hpp"
#include "hiercheck/parallel.hpp"
#include "hiercheck/rng.hpp"
#include "hiercheck/special.hpp"
#include "hiercheck/statistics.hpp"
#include "hiercheck/surprise.hpp"
