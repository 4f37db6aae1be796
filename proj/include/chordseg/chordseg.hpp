#pragma once

#include "chordseg/error.hpp"
#include "chordseg/random.hpp"
#include "chordseg/format.hpp"
#include "chordseg/harte.hpp"
#include "chordseg/segmentation.hpp"
#include "chordseg/corpus.hpp"
#include "chordseg/skipgram.hpp"
#include "chordseg/embedding.hpp"
#include "chordseg/suffix_array.hpp"
#include "chordseg/form.hpp"
#include "chordseg/metrics.hpp"
#include "chordseg/lstm.hpp"
#include "chordseg/lstm_io.hpp"
#include "chordseg/pipeline.hpp"
