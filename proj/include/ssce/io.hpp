#pragma once

#include <string>

#include "ssce/likelihood.hpp"
#include "ssce/simulate.hpp"

namespace ssce {

// Reads a dataset CSV with header `ts_tilde,stage_start,excluded`. One row per
// specimen; excluded is 0 or 1. Malformed input raises ParseError naming the
// line. The plan (dv) is not part of the file; the caller sets it.
Dataset read_dataset(const std::string& path);

// Writes the same format back: UTF-8, LF line endings, round-trippable floats.
void write_dataset(const std::string& path, const Dataset& data);

// Reads a design template CSV with header `ts_tilde,count`.
DesignTemplate read_template(const std::string& path);

// Accepts either a path to a JSON file or an inline JSON object (first
// non-space character '{'): { "<ts_tilde>": [edge_1, ..., edge_{kappa-1}] }.
BinSpec parse_bins(const std::string& spec);

} // namespace ssce
