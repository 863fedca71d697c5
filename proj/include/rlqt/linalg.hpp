#pragma once

#include "rlqt/linalg/lyapunov.hpp"
#include "rlqt/linalg/riccati.hpp"
#include "rlqt/linalg/schur.hpp"
#include "rlqt/linalg/types.hpp"
