#pragma once

#include "sliceproj/cones.hpp"
#include "sliceproj/error.hpp"
#include "sliceproj/io.hpp"
#include "sliceproj/parallel.hpp"
#include "sliceproj/probe.hpp"
#include "sliceproj/project.hpp"
#include "sliceproj/sampling.hpp"
#include "sliceproj/symmat.hpp"
#include "sliceproj/verify.hpp"
