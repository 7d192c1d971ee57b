#pragma once

#include <iosfwd>
#include <string>

#include "tgmem/event.hpp"

namespace tgmem {

// Reads an interaction CSV with rows `src,dst,timestamp,state_label,f1..fd`.
// A non-numeric first line is treated as a header and skipped. Original
// vertex ids are compacted to [0, N) in order of first appearance after the
// stable chronological sort; the state_label column is parsed and dropped.
// Malformed rows raise ParseError carrying the 1-based line number; a file
// with no data rows raises EmptyStreamError.
EventStream ingest_csv(const std::string& path);
EventStream ingest_csv(std::istream& in, const std::string& origin);

}  // namespace tgmem
