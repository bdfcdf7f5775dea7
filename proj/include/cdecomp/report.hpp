#ifndef CDECOMP_REPORT_HPP
#define CDECOMP_REPORT_HPP

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdecomp/csv.hpp"
#include "cdecomp/sensitivity.hpp"

namespace cdecomp {

struct ReportRow {
    std::string estimator;
    std::string group;
    double tau = std::numeric_limits<double>::quiet_NaN();
    double tau_lo = std::numeric_limits<double>::quiet_NaN();
    double tau_hi = std::numeric_limits<double>::quiet_NaN();
    double zeta = std::numeric_limits<double>::quiet_NaN();
    double zeta_lo = std::numeric_limits<double>::quiet_NaN();
    double zeta_hi = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double delta_lo = std::numeric_limits<double>::quiet_NaN();
    double delta_hi = std::numeric_limits<double>::quiet_NaN();
    double pct_reduction = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::string csv_num(double v) {
    return std::isfinite(v) ? format_g17(v) : std::string();
}

} // namespace detail

inline std::string decomposition_csv(const std::vector<ReportRow>& rows) {
    std::string out = "estimator,group,tau,tau_ci_lo,tau_ci_hi,zeta,zeta_ci_lo,zeta_ci_hi,"
                      "delta,delta_ci_lo,delta_ci_hi,pct_reduction\n";
    for (const auto& r : rows) {
        out += csv_escape(r.estimator) + ',' + csv_escape(r.group) + ',';
        out += detail::csv_num(r.tau) + ',' + detail::csv_num(r.tau_lo) + ',' +
               detail::csv_num(r.tau_hi) + ',';
        out += detail::csv_num(r.zeta) + ',' + detail::csv_num(r.zeta_lo) + ',' +
               detail::csv_num(r.zeta_hi) + ',';
        out += detail::csv_num(r.delta) + ',' + detail::csv_num(r.delta_lo) + ',' +
               detail::csv_num(r.delta_hi) + ',';
        out += detail::csv_num(r.pct_reduction) + '\n';
    }
    return out;
}

inline std::string grid_csv(const SensitivityGrid& grid) {
    std::string out = "r2_yu,r2_udm,bias,delta_adj,zeta_adj,zero_cross,ci_cross\n";
    for (const auto& p : grid.points) {
        out += detail::csv_num(p.r2_yu) + ',' + detail::csv_num(p.r2_udm) + ',' +
               detail::csv_num(p.bias) + ',' + detail::csv_num(p.delta_adj) + ',' +
               detail::csv_num(p.zeta_adj) + ',';
        out += p.zero_cross ? "1" : "0";
        out += ',';
        out += p.ci_cross ? "1" : "0";
        out += '\n';
    }
    return out;
}

inline std::string benchmarks_csv(const std::vector<BenchmarkPoint>& points) {
    std::string out = "covariate,r2_y,r2_dm,multiplier\n";
    for (const auto& p : points) {
        out += csv_escape(p.covariate) + ',' + detail::csv_num(p.r2_y) + ',' +
               detail::csv_num(p.r2_dm) + ',' + std::to_string(p.multiplier) + '\n';
    }
    return out;
}

// Write through a sibling temp file and rename, so a crash mid-write never
// leaves a truncated output behind.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        os.flush();
        if (!os) throw std::runtime_error("failed writing '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

inline std::string iso_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

} // namespace cdecomp

#endif
