#pragma once

#include "errors.hpp"
#include "tensor.hpp"
#include "random.hpp"
#include "fft.hpp"
#include "wav.hpp"
#include "features.hpp"
#include "norm.hpp"
#include "synth.hpp"
#include "corpus.hpp"
#include "ast.hpp"
#include "forest.hpp"
#include "probe.hpp"
#include "classifier.hpp"
#include "augment.hpp"
#include "experiment.hpp"
#include "harness.hpp"
