#pragma once

#include "tbscat/core.hpp"
#include "tbscat/lattice.hpp"
#include "tbscat/dispersion.hpp"
#include "tbscat/evolution.hpp"
#include "tbscat/spectral.hpp"
#include "tbscat/scattering.hpp"
#include "tbscat/qwalk.hpp"
