// Umbrella header.
#pragma once

#include "mopmemm/core.hpp"
#include "mopmemm/evaluation.hpp"
#include "mopmemm/features.hpp"
#include "mopmemm/graph.hpp"
#include "mopmemm/inference.hpp"
#include "mopmemm/io.hpp"
#include "mopmemm/model.hpp"
#include "mopmemm/oracle.hpp"
#include "mopmemm/parallel.hpp"
#include "mopmemm/training.hpp"
