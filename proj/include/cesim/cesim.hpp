#pragma once

#include "cesim/config.hpp"
#include "cesim/csv.hpp"
#include "cesim/errors.hpp"
#include "cesim/harness.hpp"
#include "cesim/link.hpp"
#include "cesim/model.hpp"
#include "cesim/pa.hpp"
#include "cesim/precoding.hpp"
#include "cesim/rng.hpp"
#include "cesim/waveform.hpp"
