#include "weakid/output.hpp"

#include "weakid/error.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace weakid {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.parent_path() /
                     ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot rename onto " + path.string() + ": " + ec.message());
    }
}

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

void Table::add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw Error("table row has the wrong number of columns");
    rows_.push_back(std::move(row));
}

std::string Table::csv() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out.str();
}

std::string Table::dat() const {
    std::ostringstream out;
    out << '#';
    for (const auto& h : header_) out << ' ' << h;
    out << '\n';
    for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? " " : "") << r[i];
        out << '\n';
    }
    return out.str();
}

namespace {

std::string yes(bool b) { return b ? "1" : "0"; }

}  // namespace

Table sweep_table(const SweepResult& r, bool with_walltime) {
    Table t({"e", "param", "mse", "rel_err", "coverage", "n_converged", "median_walltime_s"});
    for (const auto& l : r.levels)
        for (std::size_t i = 0; i < r.names.size(); ++i)
            t.add({format_number(l.e), r.names[i], format_number(l.params[i].mse),
                   format_number(l.params[i].rel_err), format_number(l.params[i].coverage),
                   std::to_string(l.n_converged),
                   with_walltime ? format_number(l.median_walltime) : "NA"});
    return t;
}

Table grid_table(const BoolGrid& g, const std::vector<double>& e_grid, const std::vector<double>& q_grid) {
    std::vector<std::string> header{"e"};
    for (const double q : q_grid) header.push_back(format_number(q));
    Table t(header);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        std::vector<std::string> row{format_number(e_grid[static_cast<std::size_t>(i)])};
        for (Eigen::Index j = 0; j < g.cols(); ++j) row.push_back(yes(g(i, j)));
        t.add(row);
    }
    return t;
}

Table relerr_table(const SweepResult& r) {
    std::vector<std::string> header{"e", "rel_err"};
    for (const auto& n : r.names) header.push_back("rel_err_" + n);
    Table t(header);
    for (const auto& l : r.levels) {
        std::vector<std::string> row{format_number(l.e), format_number(l.rel_err_norm)};
        for (const auto& p : l.params) row.push_back(format_number(p.rel_err));
        t.add(row);
    }
    return t;
}

Table coverage_table(const SweepResult& r) {
    Table t({"e", "param", "coverage"});
    for (const auto& l : r.levels)
        for (std::size_t i = 0; i < r.names.size(); ++i)
            t.add({format_number(l.e), r.names[i], format_number(l.params[i].coverage)});
    return t;
}

Table replicate_table(const SweepResult& r) {
    std::vector<std::string> header{"e_index", "replicate", "seed", "ok", "converged"};
    for (const auto& n : r.names) {
        header.push_back(n);
        header.push_back(n + "_lo");
        header.push_back(n + "_hi");
    }
    Table t(header);
    for (const auto& rec : r.replicates) {
        std::vector<std::string> row{std::to_string(rec.e_index), std::to_string(rec.replicate),
                                     std::to_string(rec.seed), yes(rec.ok), yes(rec.converged)};
        for (std::size_t i = 0; i < r.names.size(); ++i) {
            const bool have = rec.w_hat.size() == static_cast<Eigen::Index>(r.names.size());
            row.push_back(have ? format_number(rec.w_hat[static_cast<Eigen::Index>(i)]) : "NA");
            row.push_back(rec.ci.size() > i ? format_number(rec.ci[i].lo) : "NA");
            row.push_back(rec.ci.size() > i ? format_number(rec.ci[i].hi) : "NA");
        }
        t.add(row);
    }
    return t;
}

Table minq_table(const MinQMap& m, std::size_t e_index, const std::vector<double>& w2,
                 const std::vector<double>& w3) {
    std::vector<std::string> header{"w2"};
    for (const double v : w3) header.push_back(format_number(v));
    Table t(header);
    for (std::size_t i = 0; i < w2.size(); ++i) {
        std::vector<std::string> row{format_number(w2[i])};
        for (std::size_t j = 0; j < w3.size(); ++j) {
            const auto& q = m.q[i * w3.size() + j][e_index];
            row.push_back(q ? format_number(*q) : "NA");
        }
        t.add(row);
    }
    return t;
}

Table timing_scatter_table(const TimingTable& tt, bool with_walltime) {
    Table t({"estimator", "e", "replicate", "walltime_s", "rel_err", "converged"});
    for (const auto& r : tt.scatter)
        t.add({r.estimator, format_number(r.e), std::to_string(r.replicate),
               with_walltime ? format_number(r.walltime) : "NA", format_number(r.rel_err), yes(r.converged)});
    return t;
}

Table timing_summary_table(const TimingTable& tt, bool with_walltime) {
    Table t({"estimator", "n", "median_walltime_s", "median_rel_err", "failure_rate"});
    for (const auto& s : tt.summary)
        t.add({s.estimator, std::to_string(s.n), with_walltime ? format_number(s.median_walltime) : "NA",
               format_number(s.median_rel_err), format_number(s.failure_rate)});
    return t;
}

Table hyperscan_table(const HyperScan& s, const std::vector<std::string>& names) {
    std::vector<std::string> header{"family", "degree", "radius", "admissible", "rel_err"};
    for (const auto& n : names) header.push_back("rel_err_" + n);
    header.push_back("n_converged");
    Table t(header);
    for (const auto& r : s.rows) {
        std::vector<std::string> row{to_string(s.family), std::to_string(r.degree), format_number(r.radius),
                                     yes(r.admissible),
                                     r.admissible ? format_number(r.rel_err_norm) : "NA"};
        for (std::size_t i = 0; i < names.size(); ++i)
            row.push_back(i < r.rel_err.size() ? format_number(r.rel_err[i]) : "NA");
        row.push_back(std::to_string(r.n_converged));
        t.add(row);
    }
    return t;
}

Table profile_table(const ProfileCurve& p) {
    Table t({"value", "objective", "converged", "threshold"});
    for (Eigen::Index i = 0; i < p.grid.size(); ++i)
        t.add({format_number(p.grid[i]), format_number(p.values[i]),
               yes(p.inner_converged[static_cast<std::size_t>(i)]), format_number(p.threshold)});
    return t;
}

std::vector<std::filesystem::path> emit_plotdata(const std::filesystem::path& dir,
                                                 const std::string& name, const Table& table) {
    const auto dat = dir / (name + ".dat");
    const auto js = dir / (name + ".json");
    write_file_atomic(dat, table.dat());
    // JSON twin: one object per row keyed by column name.
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::istringstream in(table.csv());
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::string cell;
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; std::getline(ls, cell, ','); ++i) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell == "NA")
                obj[header[i]] = nullptr;
            else if (end && *end == '\0' && !cell.empty())
                obj[header[i]] = v;
            else
                obj[header[i]] = cell;
        }
        rows.push_back(obj);
    }
    write_file_atomic(js, rows.dump(1) + "\n");
    return {dat, js};
}

}  // namespace weakid
