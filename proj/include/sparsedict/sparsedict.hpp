#pragma once

#include "sparsedict/bench.hpp"
#include "sparsedict/config.hpp"
#include "sparsedict/core.hpp"
#include "sparsedict/dct.hpp"
#include "sparsedict/denoising.hpp"
#include "sparsedict/dictionary_update.hpp"
#include "sparsedict/image.hpp"
#include "sparsedict/io.hpp"
#include "sparsedict/metrics.hpp"
#include "sparsedict/parallel.hpp"
#include "sparsedict/random.hpp"
#include "sparsedict/sparse_coding.hpp"
#include "sparsedict/synthesis.hpp"
#include "sparsedict/trainer.hpp"
