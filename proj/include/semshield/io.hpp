#pragma once

// Interchange formats: headerless comma-separated matrices with shortest
// round-trip decimals, single-column index files, long-format Monte-Carlo
// dropout samples, and JSON projection models.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "semshield/embedding.hpp"

namespace semshield {

/// Shortest decimal that parses back to the same double; "inf"/"-inf"/"nan"
/// for non-finite values.
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view where = {});

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// An empty document parses as a 0 x 0 matrix.
Matrix parse_matrix_csv(std::string_view text, std::string_view where = "matrix");
std::string matrix_to_csv(const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

std::vector<std::size_t> parse_index_csv(std::string_view text, std::string_view where = "labels");
std::string index_to_csv(const std::vector<std::size_t>& v);
std::vector<std::size_t> read_index_csv(const std::filesystem::path& path);
void write_index_csv(const std::filesystem::path& path, const std::vector<std::size_t>& v);

/// Long format: example_id,pass_id,p_0,...,p_{c-1}; rows grouped by example
/// then pass, both counting from 0. Every example has the same number of
/// passes.
std::vector<Matrix> parse_mcd_csv(std::string_view text, std::string_view where = "mcd");
std::string mcd_to_csv(const std::vector<Matrix>& samples);
std::vector<Matrix> read_mcd_csv(const std::filesystem::path& path);
void write_mcd_csv(const std::filesystem::path& path, const std::vector<Matrix>& samples);

/// Probability rows must be nonnegative and sum to 1 within `tol`.
void validate_probability_rows(const Matrix& probs, std::string_view where, double tol = 1e-6);

std::string model_to_json(const ProjectionModel& model);
ProjectionModel model_from_json(std::string_view text);
ProjectionModel read_model(const std::filesystem::path& path);
std::string model_fingerprint(const ProjectionModel& model);

}  // namespace semshield
