// Umbrella header.
#pragma once

#include "lcon/alphabet.hpp"
#include "lcon/codec.hpp"
#include "lcon/container.hpp"
#include "lcon/empirical.hpp"
#include "lcon/error.hpp"
#include "lcon/ktuple.hpp"
#include "lcon/model.hpp"
#include "lcon/pipeline.hpp"
#include "lcon/privacy.hpp"
#include "lcon/random.hpp"
#include "lcon/rd.hpp"
