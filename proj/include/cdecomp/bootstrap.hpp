#ifndef CDECOMP_BOOTSTRAP_HPP
#define CDECOMP_BOOTSTRAP_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "cdecomp/error.hpp"
#include "cdecomp/rng.hpp"
#include "cdecomp/stats.hpp"
#include "cdecomp/table.hpp"

namespace cdecomp {

struct BootstrapOptions {
    int replicates = 1000;
    double level = 0.95;
    bool stratified = true; // resample within group strata, preserving group sizes
    std::uint64_t seed = 0;
    int threads = 0; // 0 = hardware concurrency
    double max_failure_rate = 0.05;
};

struct BootstrapSeries {
    std::string name;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> replicates; // successful replicates, replicate-index order
};

struct BootstrapResult {
    int requested = 0;
    int failures = 0;
    double level = 0.95;
    std::vector<BootstrapSeries> series;
};

// statistic(table, substream_seed) -> one value per name, fixed order
using StatisticFn = std::function<std::vector<double>(const ObservationTable&, std::uint64_t)>;

// Nonparametric bootstrap with percentile intervals. Replicate b draws its
// RNG stream from (seed, b), and results are reduced in replicate order, so
// the outcome is independent of how many threads execute the loop.
inline BootstrapResult bootstrap_estimate(const ObservationTable& table,
                                          const std::string& strat_column,
                                          const std::vector<std::string>& names,
                                          const StatisticFn& statistic,
                                          const BootstrapOptions& opt) {
    BootstrapResult out;
    out.requested = opt.replicates;
    out.level = opt.level;
    if (opt.level <= 0.0 || opt.level >= 1.0)
        throw ConfigError("bootstrap: level must lie strictly between 0 and 1");

    std::vector<double> point = statistic(table, opt.seed);
    if (point.size() != names.size())
        throw EstimationError("bootstrap: statistic returned " + std::to_string(point.size()) +
                              " values for " + std::to_string(names.size()) + " names");
    out.series.resize(names.size());
    for (std::size_t q = 0; q < names.size(); ++q) {
        out.series[q].name = names[q];
        out.series[q].estimate = point[q];
    }
    if (opt.replicates <= 0) return out;

    std::vector<std::vector<std::size_t>> strata;
    if (opt.stratified && !strat_column.empty()) {
        const auto& col = table.categorical(strat_column);
        strata.resize(col.levels.size());
        for (std::size_t i = 0; i < col.codes.size(); ++i)
            strata[static_cast<std::size_t>(col.codes[i])].push_back(i);
    } else {
        strata.emplace_back();
        strata.back().resize(table.n_rows());
        for (std::size_t i = 0; i < table.n_rows(); ++i) strata.back()[i] = i;
    }

    const int B = opt.replicates;
    std::vector<std::vector<double>> reps(static_cast<std::size_t>(B));
    std::vector<char> failed(static_cast<std::size_t>(B), 0);
    std::vector<std::string> fail_msg(static_cast<std::size_t>(B));

    auto run_replicate = [&](int b) {
        std::mt19937_64 rng = make_stream(opt.seed, 0xb007'0000ULL + static_cast<std::uint64_t>(b));
        std::vector<std::size_t> idx;
        idx.reserve(table.n_rows());
        for (const auto& stratum : strata) {
            if (stratum.empty()) continue;
            std::uniform_int_distribution<std::size_t> pick(0, stratum.size() - 1);
            for (std::size_t k = 0; k < stratum.size(); ++k) idx.push_back(stratum[pick(rng)]);
        }
        ObservationTable resampled = table.select_rows(idx);
        std::uint64_t rep_seed = derive_seed(opt.seed, 0x5eed'0000ULL + static_cast<std::uint64_t>(b));
        std::vector<double> v = statistic(resampled, rep_seed);
        if (v.size() != names.size()) throw EstimationError("bootstrap: statistic arity changed");
        reps[static_cast<std::size_t>(b)] = std::move(v);
    };

    unsigned hw = std::thread::hardware_concurrency();
    int n_threads = opt.threads > 0 ? opt.threads : static_cast<int>(hw ? hw : 1);
    if (n_threads > B) n_threads = B;
    if (n_threads <= 1) {
        for (int b = 0; b < B; ++b) {
            try {
                run_replicate(b);
            } catch (const std::exception& e) {
                failed[static_cast<std::size_t>(b)] = 1;
                fail_msg[static_cast<std::size_t>(b)] = e.what();
            }
        }
    } else {
        std::atomic<int> next{0};
        auto worker = [&] {
            for (;;) {
                int b = next.fetch_add(1);
                if (b >= B) return;
                try {
                    run_replicate(b);
                } catch (const std::exception& e) {
                    failed[static_cast<std::size_t>(b)] = 1;
                    fail_msg[static_cast<std::size_t>(b)] = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (int b = 0; b < B; ++b) out.failures += failed[static_cast<std::size_t>(b)];
    if (out.failures > opt.max_failure_rate * B) {
        std::string first;
        for (int b = 0; b < B; ++b)
            if (failed[static_cast<std::size_t>(b)]) {
                first = fail_msg[static_cast<std::size_t>(b)];
                break;
            }
        throw InferenceError("bootstrap: " + std::to_string(out.failures) + " of " +
                             std::to_string(B) + " replicates failed (first: " + first + ")");
    }

    const double alpha = 1.0 - opt.level;
    for (std::size_t q = 0; q < names.size(); ++q) {
        auto& s = out.series[q];
        s.replicates.reserve(static_cast<std::size_t>(B) - out.failures);
        for (int b = 0; b < B; ++b)
            if (!failed[static_cast<std::size_t>(b)])
                s.replicates.push_back(reps[static_cast<std::size_t>(b)][q]);
        if (s.replicates.empty()) throw InferenceError("bootstrap: no successful replicates");
        std::vector<double> sorted = s.replicates;
        std::sort(sorted.begin(), sorted.end());
        s.lo = quantile_sorted(sorted, alpha / 2.0);
        s.hi = quantile_sorted(sorted, 1.0 - alpha / 2.0);
        s.se = sample_sd(s.replicates);
    }
    return out;
}

} // namespace cdecomp

#endif
