#include "sign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>

#include "sign/errors.hpp"

namespace sign {

namespace {

std::unordered_map<int, int> name_counts(const std::vector<DecodedName>& names) {
    std::unordered_map<int, int> counts;
    for (const auto& n : names) {
        if (n) counts[n->index] += 1;
    }
    return counts;
}

double metric_value(const RoundEvent& ev, AgreementMetric metric) {
    return metric == AgreementMetric::pairwise ? ev.agreement_pairwise : ev.agreement_modal;
}

std::string format_double(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

CellKey key_of(const GameConfig& cfg) {
    return {to_string(cfg.condition), cfg.n_agents, cfg.memory_window, cfg.lose_shift_alpha};
}

} // namespace

double pairwise_agreement(const std::vector<DecodedName>& names) {
    const int n = static_cast<int>(names.size());
    if (n < 2) {
        throw std::invalid_argument("pairwise_agreement needs at least two agents");
    }
    long long matching = 0;
    for (const auto& [index, count] : name_counts(names)) {
        (void)index;
        matching += static_cast<long long>(count) * (count - 1) / 2;
    }
    const long long total = static_cast<long long>(n) * (n - 1) / 2;
    return static_cast<double>(matching) / static_cast<double>(total);
}

double modal_agreement(const std::vector<DecodedName>& names) {
    const int n = static_cast<int>(names.size());
    if (n < 2) {
        throw std::invalid_argument("modal_agreement needs at least two agents");
    }
    int best = 0;
    for (const auto& [index, count] : name_counts(names)) {
        (void)index;
        best = std::max(best, count);
    }
    return static_cast<double>(best) / static_cast<double>(n);
}

std::vector<AgreementSample> agreement_samples(const RunLog& log) {
    std::vector<AgreementSample> samples;
    samples.reserve(log.events.size());
    for (const auto& ev : log.events) {
        samples.push_back({ev.round, ev.agreement_pairwise, ev.agreement_modal,
                           ev.cumulative_tokens});
    }
    return samples;
}

std::optional<long long> tokens_to_convergence(const RunLog& log, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("threshold must lie in (0,1]");
    }
    for (const auto& ev : log.events) {
        if (metric_value(ev, log.config.agreement_metric) >= threshold) {
            return ev.cumulative_tokens;
        }
    }
    return std::nullopt;
}

AggregateCell aggregate(const std::vector<double>& values) {
    AggregateCell cell;
    cell.n_seeds = static_cast<int>(values.size());
    if (values.empty()) return cell;
    double sum = 0.0;
    for (double v : values) sum += v;
    cell.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
        cell.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return cell;
}

std::map<CellKey, std::vector<double>> collect_finals(const std::vector<RunLog>& logs) {
    std::map<CellKey, std::vector<double>> finals;
    AgreementMetric metric{};
    bool have_metric = false;
    for (const auto& log : logs) {
        if (log.events.empty()) continue;
        if (!have_metric) {
            metric = log.config.agreement_metric;
            have_metric = true;
        } else if (metric != log.config.agreement_metric) {
            throw ConfigError("mixed-metrics",
                              "runs in one report must share the agreement metric");
        }
        finals[key_of(log.config)].push_back(log.final_agreement());
    }
    return finals;
}

std::map<CellKey, AggregateCell> aggregate_cells(const std::vector<RunLog>& logs) {
    std::map<CellKey, AggregateCell> cells;
    for (const auto& [key, values] : collect_finals(logs)) {
        cells[key] = aggregate(values);
    }
    return cells;
}

std::vector<CurvePoint> agreement_curve(const std::vector<RunLog>& logs) {
    if (logs.empty()) {
        throw std::invalid_argument("agreement_curve needs at least one run");
    }
    const std::size_t rounds = logs.front().events.size();
    const AgreementMetric metric = logs.front().config.agreement_metric;
    for (const auto& log : logs) {
        if (log.events.size() != rounds) {
            throw ConfigError("curve-length-mismatch",
                              "runs in one curve must share the same round count");
        }
        if (log.config.agreement_metric != metric) {
            throw ConfigError("mixed-metrics", "runs in one curve must share the agreement metric");
        }
    }

    std::vector<CurvePoint> curve;
    curve.reserve(rounds);
    std::vector<double> values(logs.size());
    for (std::size_t r = 0; r < rounds; ++r) {
        double tokens = 0.0;
        for (std::size_t s = 0; s < logs.size(); ++s) {
            values[s] = metric_value(logs[s].events[r], metric);
            tokens += static_cast<double>(logs[s].events[r].cumulative_tokens);
        }
        AggregateCell agg = aggregate(values);
        curve.push_back({logs.front().events[r].round, agg.mean, agg.std_dev,
                         tokens / static_cast<double>(logs.size())});
    }
    return curve;
}

void write_summary_csv(std::ostream& out, const std::vector<RunLog>& logs) {
    const std::string metric =
        logs.empty() ? "pairwise" : to_string(logs.front().config.agreement_metric);
    out << "condition,N,K,alpha,metric,mean,std,n_seeds\n";
    for (const auto& [key, values] : collect_finals(logs)) {
        AggregateCell cell = aggregate(values);
        out << key.condition << ',' << key.n_agents << ',' << key.memory_window << ','
            << nlohmann::json(key.alpha).dump() << ',' << metric << ','
            << format_double(cell.mean, 6) << ',' << format_double(cell.std_dev, 6) << ','
            << cell.n_seeds << '\n';
    }
}

void write_table1_csv(std::ostream& out, const std::vector<RunLog>& logs) {
    // Rows (N, K), condition columns; alpha values and seeds pooled per cell.
    std::map<std::tuple<int, int>, std::map<std::string, std::vector<double>>> table;
    for (const auto& [key, values] : collect_finals(logs)) {
        auto& cell = table[{key.n_agents, key.memory_window}][key.condition];
        cell.insert(cell.end(), values.begin(), values.end());
    }
    out << "N,K,NL,NL_SW,SCHEMA\n";
    for (const auto& [nk, by_condition] : table) {
        out << std::get<0>(nk) << ',' << std::get<1>(nk);
        for (const char* condition : {"NL", "NL_SW", "SCHEMA"}) {
            auto it = by_condition.find(condition);
            if (it == by_condition.end()) {
                out << ",-";
            } else {
                AggregateCell cell = aggregate(it->second);
                out << ',' << format_double(cell.mean, 3) << " +/- "
                    << format_double(cell.std_dev, 3);
            }
        }
        out << '\n';
    }
}

void write_tokens_csv(std::ostream& out, const std::vector<RunLog>& logs,
                      const std::vector<double>& thresholds) {
    std::map<std::string, std::vector<const RunLog*>> by_condition;
    for (const auto& log : logs) {
        by_condition[to_string(log.config.condition)].push_back(&log);
    }
    out << "condition,threshold,mean_tokens,n_reached,n_runs\n";
    for (const auto& [condition, runs] : by_condition) {
        for (double threshold : thresholds) {
            double sum = 0.0;
            int reached = 0;
            for (const RunLog* log : runs) {
                if (auto tokens = tokens_to_convergence(*log, threshold)) {
                    sum += static_cast<double>(*tokens);
                    ++reached;
                }
            }
            out << condition << ',' << nlohmann::json(threshold).dump() << ',';
            if (reached == 0) {
                out << "not-reached";
            } else {
                out << format_double(sum / reached, 1);
            }
            out << ',' << reached << ',' << runs.size() << '\n';
        }
    }
}

void write_curve_csv(std::ostream& out, const std::vector<RunLog>& logs) {
    out << "round,mean,std,cumulative_tokens\n";
    for (const auto& point : agreement_curve(logs)) {
        out << point.round << ',' << format_double(point.mean, 6) << ','
            << format_double(point.std_dev, 6) << ','
            << format_double(point.mean_cumulative_tokens, 1) << '\n';
    }
}

} // namespace sign
