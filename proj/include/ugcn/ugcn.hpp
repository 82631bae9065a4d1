#pragma once

// Everything in one include.
#include "ugcn/autodiff.hpp"
#include "ugcn/error.hpp"
#include "ugcn/experiment.hpp"
#include "ugcn/gradcheck.hpp"
#include "ugcn/gradcheck_suite.hpp"
#include "ugcn/inference.hpp"
#include "ugcn/io.hpp"
#include "ugcn/loss.hpp"
#include "ugcn/metrics.hpp"
#include "ugcn/model.hpp"
#include "ugcn/nn.hpp"
#include "ugcn/optim.hpp"
#include "ugcn/pose.hpp"
#include "ugcn/skeleton.hpp"
#include "ugcn/synth.hpp"
#include "ugcn/tensor.hpp"
#include "ugcn/training.hpp"
