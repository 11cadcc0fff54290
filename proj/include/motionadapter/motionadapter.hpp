#pragma once

#include "motionadapter/assignment.hpp"
#include "motionadapter/attnmotion.hpp"
#include "motionadapter/chaining.hpp"
#include "motionadapter/correspond.hpp"
#include "motionadapter/customize.hpp"
#include "motionadapter/error.hpp"
#include "motionadapter/grid.hpp"
#include "motionadapter/guidance.hpp"
#include "motionadapter/matrix.hpp"
#include "motionadapter/records.hpp"
#include "motionadapter/synth.hpp"
#include "motionadapter/tensorio.hpp"
