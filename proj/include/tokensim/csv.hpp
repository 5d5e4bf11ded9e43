#pragma once

// CSV emission and parsing for KPI time series. Numbers are serialized with
// shortest round-trip precision, so a parse-back reproduces the in-memory
// doubles bit-for-bit and identical results always produce byte-identical
// files.

#include "tokensim/montecarlo.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tokensim {

class IoError : public Error {
public:
    using Error::Error;
};

inline constexpr std::string_view kCsvHeader =
    "run_id,t,pool_balance_xns,cum_subsidy_xns,cum_subsidy_usd,price_usd,"
    "treasury_xns,treasury_usd,n_developers,n_users,fees_usd";

/// The nine tracked outcome variables, in column order.
inline constexpr std::array<std::string_view, 9> kKpiVariables = {
    "pool_balance_xns", "cum_subsidy_xns", "cum_subsidy_usd", "price_usd",
    "treasury_xns",     "treasury_usd",    "n_developers",    "n_users",
    "fees_usd",
};

inline double kpi_value(const KpiRecord& rec, std::string_view variable) {
    if (variable == "pool_balance_xns") return rec.pool_balance_xns;
    if (variable == "cum_subsidy_xns") return rec.cum_subsidy_xns;
    if (variable == "cum_subsidy_usd") return rec.cum_subsidy_usd;
    if (variable == "price_usd") return rec.price_usd;
    if (variable == "treasury_xns") return rec.treasury_xns;
    if (variable == "treasury_usd") return rec.treasury_usd;
    if (variable == "n_developers") return rec.n_developers;
    if (variable == "n_users") return rec.n_users;
    if (variable == "fees_usd") return rec.fees_usd;
    throw IoError("unknown variable: " + std::string(variable));
}

inline std::string_view kpi_unit(std::string_view variable) {
    if (variable == "pool_balance_xns" || variable == "cum_subsidy_xns" ||
        variable == "treasury_xns") {
        return "XNS";
    }
    if (variable == "cum_subsidy_usd" || variable == "treasury_usd" || variable == "price_usd") {
        return "USD";
    }
    if (variable == "fees_usd") return "USD/day";
    if (variable == "n_developers" || variable == "n_users") return "count";
    throw IoError("unknown variable: " + std::string(variable));
}

namespace detail {

inline void append_double(std::string& out, double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

inline void append_int(std::string& out, std::int64_t value) {
    char buf[24];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

inline void append_row(std::string& out, std::string_view run_id, const KpiRecord& rec) {
    out.append(run_id);
    out.push_back(',');
    append_int(out, rec.t);
    for (const std::string_view var : kKpiVariables) {
        out.push_back(',');
        append_double(out, kpi_value(rec, var));
    }
    out.push_back('\n');
}

inline std::size_t write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed: " + path.string());
    return contents.size();
}

inline double parse_double(std::string_view field, const std::string& context) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw IoError("bad numeric field '" + std::string(field) + "' in " + context);
    }
    return value;
}

}  // namespace detail

/// Writes per-run series: one header, rows ordered by (run_id, t). Returns
/// bytes written.
inline std::size_t write_timeseries_csv(std::span<const RunResult> results,
                                        const std::filesystem::path& path) {
    std::string out;
    out.reserve(64 + results.size() * (results.empty() ? 0 : results.front().series.size()) * 96);
    out.append(kCsvHeader);
    out.push_back('\n');
    for (const RunResult& run : results) {
        char run_id[24];
        const auto [ptr, ec] = std::to_chars(run_id, run_id + sizeof(run_id), run.run_id);
        for (const KpiRecord& rec : run.series) {
            detail::append_row(out, std::string_view(run_id, ptr), rec);
        }
    }
    return detail::write_file(path, out);
}

/// Writes an aggregate: mean rows first, then the min/max envelope rows,
/// under run_id labels "mean", "min", "max".
inline std::size_t write_aggregate_csv(const AggregateResult& aggregate,
                                       const std::filesystem::path& path) {
    std::string out;
    out.append(kCsvHeader);
    out.push_back('\n');
    for (const KpiRecord& rec : aggregate.mean) detail::append_row(out, "mean", rec);
    for (const KpiRecord& rec : aggregate.env_min) detail::append_row(out, "min", rec);
    for (const KpiRecord& rec : aggregate.env_max) detail::append_row(out, "max", rec);
    return detail::write_file(path, out);
}

/// One parsed series: a numeric run id for per-run files, or "mean"/"min"/
/// "max" for aggregate files.
struct CsvSeries {
    std::string run_label;
    std::vector<KpiRecord> series;
};

inline std::vector<CsvSeries> parse_timeseries_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw IoError("missing or unexpected CSV header in " + path.string());
    }

    std::vector<CsvSeries> result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string context = path.string() + ":" + std::to_string(line_no);

        std::array<std::string_view, 11> fields;
        std::string_view rest = line;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const std::size_t comma = rest.find(',');
            if (i + 1 < fields.size()) {
                if (comma == std::string_view::npos) {
                    throw IoError("too few columns in " + context);
                }
                fields[i] = rest.substr(0, comma);
                rest.remove_prefix(comma + 1);
            } else {
                if (comma != std::string_view::npos) {
                    throw IoError("too many columns in " + context);
                }
                fields[i] = rest;
            }
        }

        KpiRecord rec;
        rec.t = static_cast<std::int64_t>(detail::parse_double(fields[1], context));
        rec.pool_balance_xns = detail::parse_double(fields[2], context);
        rec.cum_subsidy_xns = detail::parse_double(fields[3], context);
        rec.cum_subsidy_usd = detail::parse_double(fields[4], context);
        rec.price_usd = detail::parse_double(fields[5], context);
        rec.treasury_xns = detail::parse_double(fields[6], context);
        rec.treasury_usd = detail::parse_double(fields[7], context);
        rec.n_developers = detail::parse_double(fields[8], context);
        rec.n_users = detail::parse_double(fields[9], context);
        rec.fees_usd = detail::parse_double(fields[10], context);

        if (result.empty() || result.back().run_label != fields[0]) {
            result.push_back({std::string(fields[0]), {}});
        }
        result.back().series.push_back(rec);
    }
    return result;
}

}  // namespace tokensim
