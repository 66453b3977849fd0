#pragma once

// Umbrella header for the whole library.

#include "stegnet/checkpoint.hpp"
#include "stegnet/dataset.hpp"
#include "stegnet/errors.hpp"
#include "stegnet/idx.hpp"
#include "stegnet/image.hpp"
#include "stegnet/image_io.hpp"
#include "stegnet/init.hpp"
#include "stegnet/loss.hpp"
#include "stegnet/lsb.hpp"
#include "stegnet/metrics.hpp"
#include "stegnet/model.hpp"
#include "stegnet/ops.hpp"
#include "stegnet/optimizer.hpp"
#include "stegnet/rng.hpp"
#include "stegnet/tensor.hpp"
#include "stegnet/train.hpp"
