#pragma once

#include "tsdag/graph_io.hpp"

namespace tsdag {

/// The 37-node ALARM network shipped with the library (within-time edges only).
/// Variables follow the usual 1..37 numbering shifted to 0-based indices.
const GraphFile& alarm_graph();

/// 0-based index of ALARM node VENTLUNG, the target of the benchmark experiments.
inline constexpr int alarm_ventlung = 19;

}  // namespace tsdag
