#pragma once

#include "ftsdiff/basis.hpp"
#include "ftsdiff/csv.hpp"
#include "ftsdiff/eigen_analysis.hpp"
#include "ftsdiff/errors.hpp"
#include "ftsdiff/hypothesis.hpp"
#include "ftsdiff/operator_matrix.hpp"
#include "ftsdiff/parallel.hpp"
#include "ftsdiff/pivot.hpp"
#include "ftsdiff/rng.hpp"
#include "ftsdiff/separable.hpp"
#include "ftsdiff/series.hpp"
#include "ftsdiff/simlab.hpp"
#include "ftsdiff/spectral.hpp"
#include "ftsdiff/window.hpp"
