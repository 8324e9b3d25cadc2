#ifndef BLOCHFEM_FIELD_IO_HPP
#define BLOCHFEM_FIELD_IO_HPP

#include <string>

#include "blochfem/measurement.hpp"

namespace blochfem {

constexpr int kFieldFormatVersion = 1;

/// Writes content to path via a temporary file and rename.
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Text dump of a nodal field: a "# blochfem-field v1 d M R" header, then one
/// line "x1 [x2] xd re im" per closed-grid node.
std::string field_dump(const NodalField& field);
NodalField parse_field(const std::string& text);

/// Measurement file: header with mode, field count, size, epsilon and seed,
/// then "field index re im" lines.
std::string measurement_dump(const MeasurementData& data);
MeasurementData parse_measurement(const std::string& text);

}  // namespace blochfem

#endif  // BLOCHFEM_FIELD_IO_HPP
