#pragma once

#include "ulem/ambiguity.hpp"
#include "ulem/augment.hpp"
#include "ulem/beam.hpp"
#include "ulem/cache.hpp"
#include "ulem/codec.hpp"
#include "ulem/conllu.hpp"
#include "ulem/eval.hpp"
#include "ulem/lexicon.hpp"
#include "ulem/lookup.hpp"
#include "ulem/model.hpp"
#include "ulem/optim.hpp"
#include "ulem/rng.hpp"
#include "ulem/serialize.hpp"
#include "ulem/tensor.hpp"
#include "ulem/train.hpp"
#include "ulem/unicode.hpp"
#include "ulem/util.hpp"
