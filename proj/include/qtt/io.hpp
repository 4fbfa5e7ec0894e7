#pragma once

#include <iosfwd>
#include <string>

#include "qtt/tt.hpp"

// Binary container for QTT trains: "QTTB" magic, u32 version, u32 mode,
// u32 level, u64 rank profile r_0..r_L, then core entries row-major as
// little-endian 64-bit floats.

namespace qtt {

void save(std::ostream& os, const QttVector& x);
void save(std::ostream& os, const QttMatrix& a);
void save_file(const std::string& path, const QttVector& x);
void save_file(const std::string& path, const QttMatrix& a);

QttVector load_vector(std::istream& is);
QttMatrix load_matrix(std::istream& is);
QttVector load_vector_file(const std::string& path);
QttMatrix load_matrix_file(const std::string& path);

// peeks mode (2 = vector, 4 = matrix) without consuming the stream position
int peek_mode(std::istream& is);

}  // namespace qtt
