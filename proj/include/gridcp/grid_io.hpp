#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "gridcp/grid.hpp"

namespace gridcp::io {

// CGF1 layout: magic "CGRIDv1\0", u32 height, u32 width, u8 mask flag,
// height*width float64 row-major, then height*width u8 mask if flagged.
// All integers and floats little-endian.
inline constexpr char kCgfMagic[8] = {'C', 'G', 'R', 'I', 'D', 'v', '1', '\0'};

void write_cgf(std::ostream& out, const GridField& field);
GridField read_cgf(std::istream& in);

void write_cgf(const std::filesystem::path& path, const GridField& field);
GridField read_cgf(const std::filesystem::path& path);

/// Consecutive CGF1 records in one file (ensemble members, score stacks).
void write_cgf_stack(const std::filesystem::path& path, const std::vector<GridField>& fields);
std::vector<GridField> read_cgf_stack(const std::filesystem::path& path);

/// CSV with header "row,col,value[,mask]". Cells not listed are invalid.
GridField read_grid_csv(std::istream& in);
GridField read_grid_csv(const std::filesystem::path& path);
void write_grid_csv(std::ostream& out, const GridField& field);

}  // namespace gridcp::io
