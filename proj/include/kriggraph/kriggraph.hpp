#pragma once

#include "errors.hpp"
#include "random.hpp"
#include "matrix.hpp"
#include "tensor.hpp"
#include "checkpoint.hpp"
#include "graph.hpp"
#include "layers.hpp"
#include "encoder.hpp"
#include "augmentation.hpp"
#include "ssl.hpp"
#include "graphon.hpp"
#include "config.hpp"
#include "synth.hpp"
#include "dataset.hpp"
#include "baselines.hpp"
#include "pipeline.hpp"
#include "experiments.hpp"
