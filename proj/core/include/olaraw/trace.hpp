#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "olaraw/estimator.hpp"

namespace olaraw {

/// One snapshot as a labeled text record:
///   timestamp_ms=.. estimate=.. lo=.. hi=.. error_ratio=.. n_chunks=..
///   tuples=.. chunks_read=.. bytes_read=.. regime=..
/// followed by `group=..` for GROUP BY runs and `stale=1` for repeated
/// estimates.
std::string format_trace_line(const EstimateSnapshot& snap);

/// Inverse of format_trace_line for the fields it writes. Throws FormatError.
EstimateSnapshot parse_trace_line(std::string_view line);

/// `# olaraw trace seed=.. strategy=.. query=..`
std::string format_trace_header(std::uint64_t seed, std::string_view strategy, std::string_view sql);

std::string format_number(double v);

}  // namespace olaraw
