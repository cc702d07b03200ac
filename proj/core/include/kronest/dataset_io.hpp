#pragma once

#include <iosfwd>
#include <string>

#include "kronest/cluttergen.hpp"

namespace kronest {

/// KSAMP v1: one text header line
///   KSAMP v1 Np=<int> Nst=<int> L=<int> [truth=yes|no]
/// followed by little-endian float64 (re, im) pairs: every sample in column-fill
/// order, then (if truth=yes) R_st and R_p row-major and the noise power.
void write_sample_set(std::ostream& out, const SampleSet& s);
void write_sample_set(const std::string& path, const SampleSet& s);

SampleSet read_sample_set(std::istream& in);
SampleSet read_sample_set(const std::string& path);

}  // namespace kronest
