#pragma once

#include "crimegnn/bench.hpp"
#include "crimegnn/collapse.hpp"
#include "crimegnn/dense.hpp"
#include "crimegnn/error.hpp"
#include "crimegnn/gcn.hpp"
#include "crimegnn/graph.hpp"
#include "crimegnn/infomap.hpp"
#include "crimegnn/io.hpp"
#include "crimegnn/louvain.hpp"
#include "crimegnn/model.hpp"
#include "crimegnn/objectives.hpp"
#include "crimegnn/rng.hpp"
#include "crimegnn/spectral.hpp"
