#pragma once

// COO text format, one entry per line:
//
//   # shape: I1xI2x...xIN
//   i1,i2,...,iN,value
//
// Indices are 1-based. Blank lines and other '#' lines are ignored.

#include <iosfwd>
#include <string>

#include "tcache/tensor.hpp"

namespace tcache {

SparseTensor read_coo(std::istream& in);
SparseTensor read_coo_file(const std::string& path);

void write_coo(std::ostream& out, const SparseTensor& t);
void write_coo_file(const std::string& path, const SparseTensor& t);

/// Writes every nonzero entry of a dense tensor.
SparseTensor nonzeros(const DenseTensor& x);

}  // namespace tcache
