#pragma once

#include "weakid/baseline.hpp"
#include "weakid/identifiability.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace weakid {

// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Shortest round-trip-safe text for a double; "NA" for NaN.
std::string format_number(double v);

class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
    void add(std::vector<std::string> row);
    std::string csv() const;
    std::string dat() const;  // whitespace separated, header as a '#' comment

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

Table sweep_table(const SweepResult& r, bool with_walltime);
Table grid_table(const BoolGrid& g, const std::vector<double>& e_grid, const std::vector<double>& q_grid);
Table relerr_table(const SweepResult& r);
Table coverage_table(const SweepResult& r);
Table replicate_table(const SweepResult& r);
Table minq_table(const MinQMap& m, std::size_t e_index, const std::vector<double>& w2,
                 const std::vector<double>& w3);
Table timing_scatter_table(const TimingTable& t, bool with_walltime);
Table timing_summary_table(const TimingTable& t, bool with_walltime);
Table hyperscan_table(const HyperScan& s, const std::vector<std::string>& names);
Table profile_table(const ProfileCurve& p);

// Plot data: <dir>/<name>.dat for gnuplot and <dir>/<name>.json with the same columns.
std::vector<std::filesystem::path> emit_plotdata(const std::filesystem::path& dir,
                                                 const std::string& name, const Table& table);

}  // namespace weakid
