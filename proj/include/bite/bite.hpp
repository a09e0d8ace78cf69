#pragma once

// Umbrella header: everything except the CLI driver (which pulls in CLI11).

#include "bite/corpus.hpp"
#include "bite/datagen.hpp"
#include "bite/embed.hpp"
#include "bite/graph.hpp"
#include "bite/io.hpp"
#include "bite/linalg.hpp"
#include "bite/model.hpp"
#include "bite/nn.hpp"
#include "bite/refine.hpp"
#include "bite/train.hpp"
