#pragma once

#include "bkf/gibbs_common.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace bkf {

/// Trace CSV columns: iter, beta_1..beta_p, betak_1..betak_p, [sigma2], [delta].
/// iter is the sweep number of the retained draw.
std::string trace_to_csv(const Trace& trace, const Vector* sigma2);
std::string delta_to_csv(const Trace& trace);

struct LoadedTrace {
  Trace trace;
  std::optional<Vector> sigma2;
  std::vector<long> iterations;
};

LoadedTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace bkf
