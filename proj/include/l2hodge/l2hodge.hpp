#pragma once

// Umbrella header: the whole library except the JSON layer, which needs
// nlohmann/json on the include path (include l2hodge/json_io.hpp separately).

#include "l2hodge/algebra.hpp"
#include "l2hodge/complex.hpp"
#include "l2hodge/errors.hpp"
#include "l2hodge/flatcw.hpp"
#include "l2hodge/module.hpp"
#include "l2hodge/parallel.hpp"
#include "l2hodge/truncation.hpp"
#include "l2hodge/witten.hpp"
