#pragma once

#include "fieldroad/errors.hpp"
#include "fieldroad/model.hpp"
#include "fieldroad/grid.hpp"
#include "fieldroad/discrete.hpp"
#include "fieldroad/simulate.hpp"
#include "fieldroad/spectral.hpp"
#include "fieldroad/speed.hpp"
#include "fieldroad/steady.hpp"
#include "fieldroad/diagnostics.hpp"
