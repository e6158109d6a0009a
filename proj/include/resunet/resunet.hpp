#pragma once

// Umbrella header.

#include "resunet/augment.hpp"
#include "resunet/case_io.hpp"
#include "resunet/checkpoint.hpp"
#include "resunet/config.hpp"
#include "resunet/errors.hpp"
#include "resunet/fixture.hpp"
#include "resunet/inference.hpp"
#include "resunet/loss.hpp"
#include "resunet/metrics.hpp"
#include "resunet/network.hpp"
#include "resunet/nifti.hpp"
#include "resunet/optimizer.hpp"
#include "resunet/phantom.hpp"
#include "resunet/preprocess.hpp"
#include "resunet/reslice.hpp"
#include "resunet/rng.hpp"
#include "resunet/tensor.hpp"
#include "resunet/train.hpp"
#include "resunet/version.hpp"
#include "resunet/volume.hpp"
