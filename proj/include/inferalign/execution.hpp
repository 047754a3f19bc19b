#pragma once

namespace inferalign {

/// Selects the serial reference path or the OpenMP path of a kernel. Both
/// produce identical results.
enum class Execution { Serial, Parallel };

}  // namespace inferalign
