#pragma once

// Everything except report.hpp, which additionally needs nlohmann/json.

#include "rayreg/bfgs.hpp"
#include "rayreg/detection.hpp"
#include "rayreg/errors.hpp"
#include "rayreg/estimation.hpp"
#include "rayreg/fisher.hpp"
#include "rayreg/image_io.hpp"
#include "rayreg/inference.hpp"
#include "rayreg/morphology.hpp"
#include "rayreg/parallel.hpp"
#include "rayreg/random.hpp"
#include "rayreg/rayleigh.hpp"
#include "rayreg/regression.hpp"
#include "rayreg/scene.hpp"
#include "rayreg/simulation.hpp"
#include "rayreg/special.hpp"
#include "rayreg/table_io.hpp"
#include "rayreg/version.hpp"
