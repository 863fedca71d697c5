#pragma once

#include "rlqt/synthesis/augmented.hpp"
#include "rlqt/synthesis/hinf.hpp"
#include "rlqt/synthesis/lqt.hpp"
#include "rlqt/synthesis/observer.hpp"
